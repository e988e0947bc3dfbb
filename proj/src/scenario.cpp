#include "semstream/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/federation.hpp"
#include "semstream/node.hpp"

namespace semstream {
namespace {

namespace fs = std::filesystem;

/// Problem channel shared by loadScenario (throws at the first one) and
/// validateScenario (collects them all and keeps going).
struct Diag {
    std::vector<std::string>* problems = nullptr;

    void fail(const std::string& msg) {
        if (problems == nullptr)
            throw ScenarioError(msg);
        problems->push_back(msg);
    }
};

std::optional<std::string> readFile(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::ostringstream out;
    out << in.rdbuf();
    return std::move(out).str();
}

void checkKeys(Diag& diag, const YAML::Node& map, const std::string& where,
               std::initializer_list<const char*> allowed) {
    for (const auto& kv : map) {
        if (!kv.first.IsScalar()) {
            diag.fail(where + ": keys must be strings");
            continue;
        }
        const std::string& key = kv.first.Scalar();
        bool known = false;
        for (const char* a : allowed)
            known = known || key == a;
        if (!known)
            diag.fail(where + ": unknown key '" + key + "'");
    }
}

std::optional<std::int64_t> getInt(Diag& diag, const YAML::Node& map, const char* key,
                                   const std::string& where) {
    const YAML::Node n = map[key];
    if (!n)
        return std::nullopt;
    try {
        return n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        diag.fail(where + "." + key + ": expected an integer");
        return std::nullopt;
    }
}

std::optional<std::string> getStr(Diag& diag, const YAML::Node& map, const char* key,
                                  const std::string& where) {
    const YAML::Node n = map[key];
    if (!n)
        return std::nullopt;
    if (!n.IsScalar()) {
        diag.fail(where + "." + key + ": expected a string");
        return std::nullopt;
    }
    return n.Scalar();
}

/// Term fields accept `<full-iri>` or a prefixed name declared under
/// `prefixes`.
std::optional<Term> parseTermText(Diag& diag, const std::string& text,
                                  const PrefixTable& prefixes, const std::string& where) {
    if (text.size() > 1 && text.front() == '<' && text.back() == '>')
        return Term::iri(text.substr(1, text.size() - 2));
    if (auto full = prefixes.expand(text))
        return Term::iri(*full);
    diag.fail(where + ": cannot expand '" + text + "' (write <iri> or declare the prefix)");
    return std::nullopt;
}

bool blankOrComment(const std::string& line) {
    const std::size_t i = line.find_first_not_of(" \t");
    return i == std::string::npos || line[i] == '#';
}

/// Replay file: `@ <emitTimeMs>` headers, each followed by one message
/// payload in wire format until the next header. Emit times non-decreasing.
std::vector<ReplayFrame> parseReplay(Diag& diag, const std::string& text,
                                     const std::string& where) {
    std::vector<ReplayFrame> frames;
    std::optional<std::int64_t> openTime;
    std::string payload;
    std::int64_t prev = -1;

    auto flush = [&]() {
        if (!openTime)
            return;
        try {
            frames.push_back({*openTime, decode(payload)});
        } catch (const CodecParseError& e) {
            diag.fail(where + " frame @" + std::to_string(*openTime) + ": " + e.what());
        }
        payload.clear();
        openTime.reset();
    };

    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty() && line.front() == '@') {
            flush();
            const std::string at = where + " line " + std::to_string(lineNo);
            std::int64_t t = 0;
            std::size_t used = 0;
            try {
                t = std::stoll(line.substr(1), &used);
            } catch (const std::exception&) {
                diag.fail(at + ": malformed frame header (expected '@ <ms>')");
                continue;
            }
            for (std::size_t i = 1 + used; i < line.size(); ++i)
                if (std::isspace(static_cast<unsigned char>(line[i])) == 0) {
                    t = -1;
                    diag.fail(at + ": trailing characters after emit time");
                    break;
                }
            if (t < 0)
                continue;
            if (t < prev) {
                diag.fail(at + ": emit times must be non-decreasing (" + std::to_string(t) +
                          " after " + std::to_string(prev) + ")");
                continue;
            }
            prev = t;
            openTime = t;
        } else if (openTime) {
            payload += line;
            payload += '\n';
        } else if (!blankOrComment(line)) {
            diag.fail(where + " line " + std::to_string(lineNo) +
                      ": payload before the first '@ <ms>' header");
        }
    }
    flush();
    return frames;
}

Graph loadGraphFile(Diag& diag, const fs::path& path, const PrefixTable& prefixes,
                    const std::string& what) {
    auto text = readFile(path);
    if (!text) {
        diag.fail(what + ": cannot read " + path.string());
        return {};
    }
    try {
        return parseGroundGraph(*text, prefixes);
    } catch (const Error& e) {
        diag.fail(what + " (" + path.string() + "): " + e.what());
        return {};
    }
}

/// Parses one query, keeping the error type (it decides the exit code) while
/// prefixing the message with where the query came from.
bool parseQueryInto(Diag& diag, QuerySpec& spec, const std::string& text,
                    const PrefixTable& prefixes) {
    try {
        spec.ast = parseQuery(text, prefixes);
        return true;
    } catch (const QuerySyntaxError& e) {
        if (diag.problems != nullptr) {
            diag.fail("query " + spec.origin + ": " + e.what());
            return false;
        }
        const std::string prefix = "query syntax error at " + std::to_string(e.line) + ":" +
                                   std::to_string(e.column) + ": ";
        std::string detail = e.what();
        if (detail.rfind(prefix, 0) == 0)
            detail = detail.substr(prefix.size());
        throw QuerySyntaxError(e.line, e.column, spec.origin + ": " + detail);
    } catch (const QueryValidationError& e) {
        if (diag.problems != nullptr) {
            diag.fail("query " + spec.origin + ": " + e.what());
            return false;
        }
        throw QueryValidationError(spec.origin + ": " + std::string(e.what()));
    }
}

/// Output paths are written under the CLI's --out directory; keep them inside
/// it.
bool checkOutPath(Diag& diag, const std::string& path, const std::string& where) {
    if (path.empty() || path.front() == '/' || path.find("..") != std::string::npos ||
        path.find('\\') != std::string::npos) {
        diag.fail(where + ": output path '" + path + "' must be relative (no '..')");
        return false;
    }
    if (path == "metrics.txt") {
        diag.fail(where + ": output path 'metrics.txt' is reserved");
        return false;
    }
    return true;
}

Scenario loadImpl(const std::string& path, std::vector<std::string>* problems) {
    Diag diag{problems};
    Scenario s;
    const fs::path file = fs::absolute(fs::path(path));
    const fs::path dir = file.parent_path();

    auto text = readFile(file);
    if (!text) {
        diag.fail("cannot read scenario file " + path);
        return s;
    }
    YAML::Node root;
    try {
        root = YAML::Load(*text);
    } catch (const YAML::Exception& e) {
        diag.fail(path + ": " + e.what());
        return s;
    }
    if (!root.IsMap()) {
        diag.fail(path + ": top level must be a mapping");
        return s;
    }
    checkKeys(diag, root, path, {"prefixes", "ontology", "run", "latency", "nodes"});

    if (const YAML::Node px = root["prefixes"]) {
        if (!px.IsMap()) {
            diag.fail("prefixes: must map labels to IRI bases");
        } else {
            for (const auto& kv : px) {
                if (!kv.first.IsScalar() || !kv.second.IsScalar()) {
                    diag.fail("prefixes: labels and bases must be strings");
                    continue;
                }
                s.prefixes.add(kv.first.Scalar(), kv.second.Scalar());
            }
        }
    }

    if (const YAML::Node run = root["run"]; run && run.IsMap()) {
        checkKeys(diag, run, "run", {"duration", "seed"});
        if (auto d = getInt(diag, run, "duration", "run"); d && *d >= 0)
            s.duration = *d;
        else if (d)
            diag.fail("run.duration: must be >= 0");
        else
            diag.fail("run.duration: required");
        if (auto seed = getInt(diag, run, "seed", "run")) {
            if (*seed < 0)
                diag.fail("run.seed: must be >= 0");
            else
                s.seed = static_cast<std::uint64_t>(*seed);
        }
    } else {
        diag.fail(path + ": missing 'run' mapping");
    }

    if (const YAML::Node lat = root["latency"]) {
        if (!lat.IsMap()) {
            diag.fail("latency: must be a mapping");
        } else {
            checkKeys(diag, lat, "latency", {"default", "links"});
            if (auto def = getInt(diag, lat, "default", "latency")) {
                if (*def < 0)
                    diag.fail("latency.default: must be >= 0");
                else
                    s.latency.defaultMs = *def;
            }
            if (const YAML::Node links = lat["links"]) {
                if (!links.IsSequence())
                    diag.fail("latency.links: must be a list");
                else
                    for (std::size_t i = 0; i < links.size(); ++i) {
                        const std::string where = "latency.links[" + std::to_string(i) + "]";
                        const YAML::Node ln = links[i];
                        if (!ln.IsMap()) {
                            diag.fail(where + ": must be a mapping");
                            continue;
                        }
                        checkKeys(diag, ln, where, {"from", "to", "ms"});
                        auto fromS = getStr(diag, ln, "from", where);
                        auto toS = getStr(diag, ln, "to", where);
                        auto ms = getInt(diag, ln, "ms", where);
                        if (!fromS || !toS || !ms) {
                            diag.fail(where + ": needs from, to and ms");
                            continue;
                        }
                        if (*ms < 0) {
                            diag.fail(where + ".ms: must be >= 0");
                            continue;
                        }
                        auto from = parseTermText(diag, *fromS, s.prefixes, where + ".from");
                        auto to = parseTermText(diag, *toS, s.prefixes, where + ".to");
                        if (from && to)
                            s.latency.links[{*from, *to}] = *ms;
                    }
            }
        }
    }

    if (auto onto = getStr(diag, root, "ontology", path))
        s.ontology = ontologyFromGraph(loadGraphFile(diag, dir / *onto, s.prefixes, "ontology"));
    s.closure = computeClosure(s.ontology);

    if (const YAML::Node nodes = root["nodes"]) {
        if (!nodes.IsSequence())
            diag.fail("nodes: must be a list");
        else
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const std::string where = "nodes[" + std::to_string(i) + "]";
                const YAML::Node nn = nodes[i];
                if (!nn.IsMap()) {
                    diag.fail(where + ": must be a mapping");
                    continue;
                }
                checkKeys(diag, nn, where, {"id", "kg", "join", "leave", "streams", "queries"});
                auto idS = getStr(diag, nn, "id", where);
                if (!idS) {
                    diag.fail(where + ".id: required");
                    continue;
                }
                auto id = parseTermText(diag, *idS, s.prefixes, where + ".id");
                if (!id)
                    continue;
                NodeSpec ns;
                ns.id = *id;
                if (auto kg = getStr(diag, nn, "kg", where))
                    ns.backgroundKG = loadGraphFile(diag, dir / *kg, s.prefixes, where + ".kg");
                if (auto join = getInt(diag, nn, "join", where)) {
                    if (*join < 0)
                        diag.fail(where + ".join: must be >= 0");
                    else
                        ns.joinTime = *join;
                }
                if (auto leave = getInt(diag, nn, "leave", where)) {
                    if (*leave < ns.joinTime)
                        diag.fail(where + ".leave: before join time");
                    else
                        ns.leaveTime = *leave;
                }

                if (const YAML::Node streams = nn["streams"]) {
                    if (!streams.IsSequence())
                        diag.fail(where + ".streams: must be a list");
                    else
                        for (std::size_t j = 0; j < streams.size(); ++j) {
                            const std::string sw = where + ".streams[" + std::to_string(j) + "]";
                            const YAML::Node sn = streams[j];
                            if (!sn.IsMap()) {
                                diag.fail(sw + ": must be a mapping");
                                continue;
                            }
                            checkKeys(diag, sn, sw, {"topic", "meta", "replay"});
                            auto topicS = getStr(diag, sn, "topic", sw);
                            if (!topicS) {
                                diag.fail(sw + ".topic: required");
                                continue;
                            }
                            auto topic = parseTermText(diag, *topicS, s.prefixes, sw + ".topic");
                            if (!topic)
                                continue;
                            StreamSpec st;
                            st.topic = *topic;
                            if (auto meta = getStr(diag, sn, "meta", sw))
                                st.metadata =
                                    loadGraphFile(diag, dir / *meta, s.prefixes, sw + ".meta");
                            if (auto replay = getStr(diag, sn, "replay", sw)) {
                                auto rtext = readFile(dir / *replay);
                                if (!rtext)
                                    diag.fail(sw + ".replay: cannot read " +
                                              (dir / *replay).string());
                                else
                                    st.frames = parseReplay(diag, *rtext, *replay);
                                for (const ReplayFrame& f : st.frames)
                                    if (f.emitTime < ns.joinTime ||
                                        (ns.leaveTime && f.emitTime >= *ns.leaveTime))
                                        diag.fail(*replay + " frame @" +
                                                  std::to_string(f.emitTime) + ": " + *idS +
                                                  " is not joined at that time");
                            }
                            ns.streams.push_back(std::move(st));
                        }
                }

                if (const YAML::Node queries = nn["queries"]) {
                    if (!queries.IsSequence())
                        diag.fail(where + ".queries: must be a list");
                    else
                        for (std::size_t k = 0; k < queries.size(); ++k) {
                            const std::string qw = where + ".queries[" + std::to_string(k) + "]";
                            const YAML::Node qn = queries[k];
                            if (!qn.IsMap()) {
                                diag.fail(qw + ": must be a mapping");
                                continue;
                            }
                            checkKeys(diag, qn, qw, {"file", "inline", "results", "tee"});
                            auto fileS = getStr(diag, qn, "file", qw);
                            auto inlineS = getStr(diag, qn, "inline", qw);
                            if (static_cast<int>(fileS.has_value()) +
                                    static_cast<int>(inlineS.has_value()) !=
                                1) {
                                diag.fail(qw + ": exactly one of 'file' or 'inline'");
                                continue;
                            }
                            QuerySpec qs;
                            std::string qtext;
                            if (fileS) {
                                qs.origin = *fileS;
                                auto qt = readFile(dir / *fileS);
                                if (!qt) {
                                    diag.fail(qw + ".file: cannot read " +
                                              (dir / *fileS).string());
                                    continue;
                                }
                                qtext = *qt;
                            } else {
                                qs.origin = qw;
                                qtext = *inlineS;
                            }
                            if (!parseQueryInto(diag, qs, qtext, s.prefixes))
                                continue;
                            if (auto res = getStr(diag, qn, "results", qw))
                                if (checkOutPath(diag, *res, qw + ".results"))
                                    qs.resultsPath = *res;
                            if (auto tee = getStr(diag, qn, "tee", qw)) {
                                if (!qs.ast.registerIri)
                                    diag.fail(qw + ".tee: requires a REGISTER query");
                                else if (checkOutPath(diag, *tee, qw + ".tee"))
                                    qs.teePath = *tee;
                            }
                            ns.queries.push_back(std::move(qs));
                        }
                }
                s.nodes.push_back(std::move(ns));
            }
    }

    // Cross-cutting checks: the simulation relies on unique node ids, unique
    // topics (declared or registered) and unshared output files.
    std::set<Term> ids;
    std::map<Term, std::string> topics;
    std::set<std::string> outPaths;
    for (const NodeSpec& ns : s.nodes) {
        if (!ids.insert(ns.id).second)
            diag.fail("duplicate node id " + serializeTerm(ns.id));
        auto claimTopic = [&](const Term& topic, const std::string& who) {
            auto [it, fresh] = topics.emplace(topic, who);
            if (!fresh)
                diag.fail(who + ": topic " + serializeTerm(topic) + " already used by " +
                          it->second);
        };
        for (const StreamSpec& st : ns.streams)
            claimTopic(st.topic, "node " + serializeTerm(ns.id));
        for (const QuerySpec& qs : ns.queries) {
            if (qs.ast.registerIri)
                claimTopic(*qs.ast.registerIri, "query " + qs.origin);
            for (const std::string* p : {&qs.resultsPath, &qs.teePath})
                if (!p->empty() && !outPaths.insert(*p).second)
                    diag.fail("query " + qs.origin + ": output path '" + *p +
                              "' used more than once");
        }
    }
    return s;
}

} // namespace

Scenario loadScenario(const std::string& path) { return loadImpl(path, nullptr); }

std::vector<std::string> validateScenario(const std::string& path) {
    std::vector<std::string> problems;
    loadImpl(path, &problems);
    return problems;
}

RunReport runScenario(const Scenario& scenario, RunMode mode) {
    Broker broker(mode, scenario.latency);
    RunReport report;

    // All output buffers exist before the run starts: sinks hold pointers
    // into the map, and pre-sizing keeps parallel handler execution away from
    // any map mutation.
    report.outputs["metrics.txt"];
    for (const NodeSpec& ns : scenario.nodes)
        for (const QuerySpec& qs : ns.queries) {
            if (!qs.resultsPath.empty())
                report.outputs[qs.resultsPath];
            if (!qs.teePath.empty())
                report.outputs[qs.teePath];
        }

    std::vector<std::unique_ptr<SemanticNode>> nodes;
    std::vector<std::unique_ptr<Federation>> feds;
    nodes.reserve(scenario.nodes.size());
    feds.reserve(scenario.nodes.size());

    for (const NodeSpec& ns : scenario.nodes) {
        nodes.push_back(
            std::make_unique<SemanticNode>(broker, ns.id, ns.backgroundKG, scenario.closure));
        feds.push_back(std::make_unique<Federation>(*nodes.back()));
        SemanticNode* node = nodes.back().get();
        Federation* fed = feds.back().get();
        const NodeSpec* spec = &ns;

        broker.scheduleAction(ns.joinTime, [&broker, &report, node, fed, spec](Broker&,
                                                                               Effects& eff) {
            for (const StreamSpec& st : spec->streams)
                node->declareStream(st.topic, st.metadata, eff);
            node->join(eff);
            for (const QuerySpec& qs : spec->queries) {
                DeployedQuery& q = fed->deploy(qs.ast, eff);
                DeployedQuery* dq = &q;
                if (!qs.resultsPath.empty()) {
                    std::string* log = &report.outputs[qs.resultsPath];
                    q.onResults([log, dq](const Term& source, const ResultDelta& delta,
                                          Effects&) {
                        const bool select = dq->ast().form == QueryAST::Form::Select;
                        for (const Binding& b : delta.newBindings) {
                            const Binding row =
                                select ? projectBinding(b, dq->ast().selectVars) : b;
                            *log += serializeTerm(source);
                            *log += ' ';
                            *log += std::to_string(delta.atTime);
                            const std::string pairs = serializeBinding(row);
                            if (!pairs.empty()) {
                                *log += ' ';
                                *log += pairs;
                            }
                            *log += '\n';
                        }
                    });
                }
                if (!qs.teePath.empty()) {
                    std::string* tee = &report.outputs[qs.teePath];
                    q.onResults(
                        [tee, dq, &broker](const Term&, const ResultDelta& delta, Effects&) {
                            const Graph out = dq->runtime().constructOutput(delta.newBindings);
                            if (out.empty())
                                return;
                            *tee += "@ " + std::to_string(broker.now()) + "\n" + encode(out) +
                                    "\n";
                        });
                }
            }
        });
        if (ns.leaveTime)
            broker.scheduleAction(*ns.leaveTime,
                                  [node](Broker&, Effects& eff) { node->leave(eff); });
        for (const StreamSpec& st : ns.streams) {
            const Term* topic = &st.topic;
            for (const ReplayFrame& f : st.frames) {
                const Graph* g = &f.graph;
                broker.scheduleAction(f.emitTime, [node, topic, g](Broker&, Effects& eff) {
                    node->publish(*topic, *g, eff);
                });
            }
        }
    }

    broker.runUntil(scenario.duration);

    std::map<std::string, std::uint64_t> metrics;
    report.broker = broker.metrics();
    metrics["broker.published"] = report.broker.published;
    metrics["broker.delivered"] = report.broker.delivered;
    metrics["broker.skipped"] = report.broker.skipped;
    metrics["run.duration"] = static_cast<std::uint64_t>(scenario.duration);
    metrics["run.seed"] = scenario.seed;
    for (std::size_t i = 0; i < scenario.nodes.size(); ++i) {
        const auto& queries = feds[i]->queries();
        for (std::size_t k = 0; k < queries.size(); ++k) {
            const DeployedQuery& q = *queries[k];
            const QueryMetrics& qm = q.runtime().metrics();
            const std::string prefix = "query." + scenario.nodes[i].id.iriValue() + "." +
                                       std::to_string(k) + ".";
            metrics[prefix + "elements"] = qm.elementsIngested;
            metrics[prefix + "lateDrops"] = qm.lateDrops;
            metrics[prefix + "timestampDrops"] = qm.timestampDrops;
            metrics[prefix + "duplicateTimestamps"] = qm.duplicateTimestamps;
            metrics[prefix + "evaluations"] = qm.evaluations;
            metrics[prefix + "results"] = qm.resultsEmitted;
            metrics[prefix + "outputs"] = q.outputsPublished();
        }
        for (const auto& [q, topic] : feds[i]->unresolvedGroundSelectors()) {
            std::string origin;
            for (std::size_t k = 0; k < queries.size(); ++k)
                if (queries[k].get() == q)
                    origin = scenario.nodes[i].queries[k].origin;
            report.unresolved.push_back(serializeTerm(scenario.nodes[i].id) + " query " + origin +
                                        ": stream " + serializeTerm(topic) +
                                        " was never advertised");
        }
    }
    std::string& mtext = report.outputs["metrics.txt"];
    for (const auto& [key, value] : metrics)
        mtext += key + " " + std::to_string(value) + "\n";
    return report;
}

} // namespace semstream
