#include "semstream/window.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <limits>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/vocab.hpp"

namespace semstream {

namespace {

constexpr std::int64_t kNoWatermark = std::numeric_limits<std::int64_t>::min();
constexpr std::size_t kNoPattern = static_cast<std::size_t>(-1);

bool digit(const std::string& s, std::size_t pos) {
    return pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])) != 0;
}

bool fixedDigits(const std::string& s, std::size_t& pos, int count, std::int64_t& out) {
    std::int64_t v = 0;
    for (int i = 0; i < count; ++i) {
        if (!digit(s, pos)) return false;
        v = v * 10 + (s[pos++] - '0');
    }
    out = v;
    return true;
}

bool expect(const std::string& s, std::size_t& pos, char c) {
    if (pos >= s.size() || s[pos] != c) return false;
    ++pos;
    return true;
}

std::int64_t daysFromCivil(std::int64_t y, std::int64_t m, std::int64_t d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

/// "YYYY-MM-DDTHH:MM:SS[.fff][Z|±HH:MM]" to epoch milliseconds; a missing
/// timezone means UTC. Sub-millisecond fraction digits are truncated.
bool parseDateTimeMs(const std::string& s, std::int64_t& out) {
    std::size_t pos = 0;
    bool negYear = false;
    if (pos < s.size() && s[pos] == '-') {
        negYear = true;
        ++pos;
    }
    std::int64_t y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!fixedDigits(s, pos, 4, y)) return false;
    while (digit(s, pos)) { // xsd:dateTime years may exceed four digits
        y = y * 10 + (s[pos++] - '0');
        if (y > 999999) return false;
    }
    if (negYear) y = -y;
    if (!expect(s, pos, '-') || !fixedDigits(s, pos, 2, mo)) return false;
    if (!expect(s, pos, '-') || !fixedDigits(s, pos, 2, d)) return false;
    if (!expect(s, pos, 'T') || !fixedDigits(s, pos, 2, h)) return false;
    if (!expect(s, pos, ':') || !fixedDigits(s, pos, 2, mi)) return false;
    if (!expect(s, pos, ':') || !fixedDigits(s, pos, 2, sec)) return false;
    if (mo < 1 || mo > 12 || h > 23 || mi > 59 || sec > 59) return false;
    static const int daysInMonth[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (d < 1 || d > daysInMonth[mo - 1] + (mo == 2 && leap ? 1 : 0)) return false;

    std::int64_t millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        if (!digit(s, pos)) return false;
        int scale = 100;
        while (digit(s, pos)) {
            millis += (s[pos++] - '0') * scale;
            scale /= 10;
        }
    }
    std::int64_t offsetMin = 0;
    if (pos < s.size()) {
        const char c = s[pos];
        if (c == 'Z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            ++pos;
            std::int64_t oh = 0, om = 0;
            if (!fixedDigits(s, pos, 2, oh) || !expect(s, pos, ':') || !fixedDigits(s, pos, 2, om))
                return false;
            if (oh > 14 || om > 59) return false;
            offsetMin = (c == '-' ? -1 : 1) * (oh * 60 + om);
        }
    }
    if (pos != s.size()) return false;

    const std::int64_t days = daysFromCivil(y, mo, d);
    out = ((days * 86400 + h * 3600 + mi * 60 + sec) * 1000 + millis) - offsetMin * 60000;
    return true;
}

bool parseIntegerMs(const std::string& s, std::int64_t& out) {
    std::size_t pos = 0;
    bool neg = false;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) neg = s[pos++] == '-';
    if (pos >= s.size()) return false;
    std::int64_t v = 0;
    for (; pos < s.size(); ++pos) {
        if (!digit(s, pos)) return false;
        const int dg = s[pos] - '0';
        if (v > (std::numeric_limits<std::int64_t>::max() - dg) / 10) return false;
        v = v * 10 + dg;
    }
    out = neg ? -v : v;
    return true;
}

std::int64_t parseTimestamp(const Term& object) {
    if (!object.isLiteral())
        throw MalformedTimestampError("timestamp object is not a literal: " +
                                      serializeTerm(object));
    std::int64_t v = 0;
    if (object.datatype() == vocab::kXsdDateTime) {
        if (!parseDateTimeMs(object.lexicalForm(), v))
            throw MalformedTimestampError("bad xsd:dateTime \"" + object.lexicalForm() + "\"");
    } else if (!parseIntegerMs(object.lexicalForm(), v)) {
        throw MalformedTimestampError("timestamp literal \"" + object.lexicalForm() +
                                      "\" is not an integer millisecond count");
    }
    return v;
}

using Tagged = std::pair<Triple, std::uint64_t>;
using Derivations = std::map<Binding, std::set<std::set<std::uint64_t>>>;

/// Seminaive enumeration: assignments placing a new triple at slot `newSlot`,
/// old triples before it and anything at the slots after, so that the union
/// over all slots is exactly the set of assignments using >= 1 new triple.
struct DeriveWalk {
    const std::vector<TriplePattern>& patterns;
    const std::vector<Tagged>& oldTriples;
    const std::vector<Tagged>& newTriples;
    const std::vector<Tagged>& allTriples;
    const Closure& closure;
    std::size_t newSlot;
    Derivations& out;

    void walk(std::size_t i, const Binding& current, std::set<std::uint64_t>& seqs) {
        if (i == patterns.size()) {
            out[current].insert(seqs);
            return;
        }
        const auto& pool = i < newSlot ? oldTriples : (i == newSlot ? newTriples : allTriples);
        std::vector<Binding> extensions;
        for (const auto& [triple, seq] : pool) {
            extensions.clear();
            entailedUnifyTriple(patterns[i], triple, closure, current, extensions);
            if (extensions.empty()) continue;
            const bool added = seqs.insert(seq).second;
            for (const Binding& next : extensions) walk(i + 1, next, seqs);
            if (added) seqs.erase(seq);
        }
    }
};

/// Folds freshly derived bindings into a window's derivation store, tagging
/// each with the stream selector variable. Embeddings whose binding already
/// maps the selector variable elsewhere are contradictions and are dropped.
void tagAndMerge(Derivations& dst, const Derivations& src, const PatternTerm& selector,
                 const Term& topic, BindingSet* newlyCurrent) {
    for (const auto& [binding, seqSets] : src) {
        Binding tagged = binding;
        if (selector.isVar() && !tagged.bind(selector.varName(), topic)) continue;
        auto [it, fresh] = dst.try_emplace(std::move(tagged));
        if (fresh && newlyCurrent != nullptr) newlyCurrent->insert(it->first);
        it->second.insert(seqSets.begin(), seqSets.end());
    }
}

} // namespace

std::int64_t extractAppTime(const Graph& graph, const Term& onPredicate, bool& duplicate) {
    const Triple* best = nullptr;
    std::string bestKey;
    std::size_t matches = 0;
    for (const Triple& t : graph) {
        if (t.predicate != onPredicate) continue;
        ++matches;
        std::string key = serializeTriple(t);
        if (best == nullptr || key < bestKey) {
            best = &t;
            bestKey = std::move(key);
        }
    }
    duplicate = matches > 1;
    if (best == nullptr)
        throw MissingTimestampError("no " + serializeTerm(onPredicate) + " triple in message");
    return parseTimestamp(best->object);
}

std::int64_t extractAppTime(const Graph& graph, const Term& onPredicate) {
    bool duplicate = false;
    return extractAppTime(graph, onPredicate, duplicate);
}

Binding projectBinding(const Binding& b, const std::vector<std::string>& vars) {
    Binding out;
    for (const std::string& v : vars)
        if (const Term* t = b.lookup(v)) out.bind(v, *t);
    return out;
}

QueryRuntime::QueryRuntime(QueryAST ast, Graph knowledgeGraph, Closure closure)
    : ast_(std::move(ast)),
      kg_(std::move(knowledgeGraph)),
      closure_(std::move(closure)),
      watermark_(kNoWatermark) {
    topics_.resize(ast_.streamPatterns.size());
    windows_.resize(ast_.streamPatterns.size());
    for (std::size_t k = 0; k < ast_.streamPatterns.size(); ++k) {
        const PatternTerm& selector = ast_.streamPatterns[k].selector;
        if (selector.isGround()) topics_[k].insert(selector.term());
    }
    reseed();
}

void QueryRuntime::reseed() { seeds_ = entailedMatchBGP(ast_.staticPatterns, kg_, closure_); }

void QueryRuntime::setTopics(std::size_t streamPattern, const std::set<Term>& topics) {
    topics_.at(streamPattern) = topics;
    auto& wmap = windows_.at(streamPattern);
    for (auto it = wmap.begin(); it != wmap.end();)
        it = topics.count(it->first) != 0 ? std::next(it) : wmap.erase(it);
    pruneEmitted();
}

const std::set<Term>& QueryRuntime::topics(std::size_t streamPattern) const {
    return topics_.at(streamPattern);
}

bool QueryRuntime::subscribesTo(const Term& topic) const {
    for (const auto& set : topics_)
        if (set.count(topic) != 0) return true;
    return false;
}

ResultDelta QueryRuntime::setKnowledgeGraph(Graph knowledgeGraph, Closure closure) {
    kg_ = std::move(knowledgeGraph);
    closure_ = std::move(closure);
    reseed();
    // Matching stream content depends on the closure, so every window's
    // derivations are rebuilt from its buffered elements.
    for (std::size_t k = 0; k < windows_.size(); ++k) {
        const auto& sp = ast_.streamPatterns[k];
        for (auto& [topic, window] : windows_[k]) {
            std::vector<Tagged> all;
            for (const auto& [key, buffered] : window.elements)
                for (const Triple& t : buffered.graph) all.emplace_back(t, buffered.seq);
            const Derivations derived = derive(sp.patterns, {}, all);
            window.derivations.clear();
            tagAndMerge(window.derivations, derived, sp.selector, topic, nullptr);
        }
    }
    ++metrics_.evaluations;
    const BindingSet full = joinAcross(kNoPattern, {});
    BindingSet delta;
    for (const Binding& b : full)
        if (emitted_.count(b) == 0) delta.insert(b);
    emitted_ = full;
    metrics_.resultsEmitted += delta.size();
    return {std::move(delta), watermark_ == kNoWatermark ? 0 : watermark_};
}

ResultDelta QueryRuntime::ingest(const StreamElement& element) {
    ++metrics_.elementsIngested;
    std::vector<std::size_t> subscribed;
    for (std::size_t k = 0; k < topics_.size(); ++k)
        if (topics_[k].count(element.topic) != 0) subscribed.push_back(k);
    if (subscribed.empty()) return {{}, watermark_ == kNoWatermark ? 0 : watermark_};

    // Each stream pattern extracts time through its own ON predicate; the
    // element survives if any subscribed pattern can read a timestamp.
    std::map<std::size_t, std::int64_t> appTimes;
    std::exception_ptr firstError;
    for (std::size_t k : subscribed) {
        try {
            bool duplicate = false;
            appTimes[k] = extractAppTime(element.graph,
                                         ast_.streamPatterns[k].window.onPredicate, duplicate);
            if (duplicate) ++metrics_.duplicateTimestamps;
        } catch (const Error&) {
            if (!firstError) firstError = std::current_exception();
        }
    }
    if (appTimes.empty()) {
        ++metrics_.timestampDrops;
        std::rethrow_exception(firstError);
    }

    for (const auto& [k, t] : appTimes) watermark_ = std::max(watermark_, t);
    if (evict(watermark_)) pruneEmitted();

    BindingSet deltaFull;
    bool inserted = false;
    for (const auto& [k, t] : appTimes) {
        const auto& sp = ast_.streamPatterns[k];
        if (t + sp.window.rangeMs <= watermark_) { // late: outside (wm - range, wm]
            ++metrics_.lateDrops;
            continue;
        }
        TopicWindow& window = windows_[k][element.topic];
        std::vector<Tagged> oldTriples;
        for (const auto& [key, buffered] : window.elements)
            for (const Triple& triple : buffered.graph)
                oldTriples.emplace_back(triple, buffered.seq);
        window.elements[{t, element.seq}] = Buffered{t, element.seq, element.graph};
        std::vector<Tagged> newTriples;
        for (const Triple& triple : element.graph) newTriples.emplace_back(triple, element.seq);

        const Derivations derived = derive(sp.patterns, oldTriples, newTriples);
        BindingSet newlyCurrent;
        tagAndMerge(window.derivations, derived, sp.selector, element.topic, &newlyCurrent);
        inserted = true;
        if (!newlyCurrent.empty()) {
            const BindingSet part = joinAcross(k, newlyCurrent);
            deltaFull.insert(part.begin(), part.end());
        }
    }
    if (inserted) ++metrics_.evaluations;

    BindingSet delta;
    for (const Binding& b : deltaFull)
        if (emitted_.insert(b).second) delta.insert(b);
    metrics_.resultsEmitted += delta.size();
    return {std::move(delta), watermark_};
}

BindingSet QueryRuntime::evaluateFull() const {
    // Deliberately ignores the incremental state: fresh static bindings,
    // entailed BGP matching over each window's union graph, then the join.
    BindingSet current = entailedMatchBGP(ast_.staticPatterns, kg_, closure_);
    for (std::size_t k = 0; k < windows_.size() && !current.empty(); ++k) {
        const auto& sp = ast_.streamPatterns[k];
        BindingSet streamBindings;
        for (const auto& [topic, window] : windows_[k]) {
            Graph unionGraph;
            for (const auto& [key, buffered] : window.elements) unionGraph.merge(buffered.graph);
            for (const Binding& b : entailedMatchBGP(sp.patterns, unionGraph, closure_)) {
                Binding tagged = b;
                if (sp.selector.isVar() && !tagged.bind(sp.selector.varName(), topic)) continue;
                streamBindings.insert(std::move(tagged));
            }
        }
        BindingSet next;
        for (const Binding& a : current)
            for (const Binding& b : streamBindings)
                if (auto merged = Binding::merge(a, b)) next.insert(std::move(*merged));
        current = std::move(next);
    }
    return current;
}

Graph QueryRuntime::constructOutput(const BindingSet& bindings) const {
    Graph out;
    for (const Binding& b : bindings)
        for (const TriplePattern& row : ast_.constructTemplates) {
            try {
                out.insert(substituteTriple(row, b));
            } catch (const UnboundVariableError&) {
                // row skipped, other rows of the template still apply
            }
        }
    return out;
}

std::map<Term, std::vector<std::int64_t>> QueryRuntime::bufferedAppTimes(
    std::size_t streamPattern) const {
    std::map<Term, std::vector<std::int64_t>> out;
    for (const auto& [topic, window] : windows_.at(streamPattern)) {
        auto& times = out[topic];
        for (const auto& [key, buffered] : window.elements) times.push_back(buffered.appTime);
    }
    return out;
}

bool QueryRuntime::evict(std::int64_t watermark) {
    bool removedAny = false;
    for (std::size_t k = 0; k < windows_.size(); ++k) {
        const std::int64_t range = ast_.streamPatterns[k].window.rangeMs;
        for (auto& [topic, window] : windows_[k]) {
            std::set<std::uint64_t> dead;
            for (auto it = window.elements.begin(); it != window.elements.end();) {
                if (it->second.appTime + range > watermark) break; // ordered by appTime
                dead.insert(it->second.seq);
                it = window.elements.erase(it);
            }
            if (dead.empty()) continue;
            removedAny = true;
            for (auto it = window.derivations.begin(); it != window.derivations.end();) {
                auto& sets = it->second;
                for (auto s = sets.begin(); s != sets.end();) {
                    const bool hit = std::any_of(s->begin(), s->end(), [&](std::uint64_t q) {
                        return dead.count(q) != 0;
                    });
                    s = hit ? sets.erase(s) : std::next(s);
                }
                it = sets.empty() ? window.derivations.erase(it) : std::next(it);
            }
        }
    }
    return removedAny;
}

/// A previously emitted result stays suppressed while every one of its
/// components is still derivable; once any component dies the result leaves
/// the emitted set and may be emitted again later.
bool QueryRuntime::live(const Binding& b) const {
    const bool seeded = std::any_of(seeds_.begin(), seeds_.end(),
                                    [&](const Binding& s) { return b.subsumes(s); });
    if (!seeded) return false;
    for (const auto& perTopic : windows_) {
        bool supported = false;
        for (const auto& [topic, window] : perTopic) {
            for (const auto& [component, sets] : window.derivations)
                if (b.subsumes(component)) {
                    supported = true;
                    break;
                }
            if (supported) break;
        }
        if (!supported) return false;
    }
    return true;
}

void QueryRuntime::pruneEmitted() {
    for (auto it = emitted_.begin(); it != emitted_.end();)
        it = live(*it) ? std::next(it) : emitted_.erase(it);
}

BindingSet QueryRuntime::patternCurrent(std::size_t sp) const {
    BindingSet out;
    for (const auto& [topic, window] : windows_[sp])
        for (const auto& [binding, sets] : window.derivations) out.insert(binding);
    return out;
}

Derivations QueryRuntime::derive(const std::vector<TriplePattern>& patterns,
                                 const std::vector<Tagged>& oldTriples,
                                 const std::vector<Tagged>& newTriples) const {
    Derivations out;
    if (newTriples.empty() || patterns.empty()) return out;
    std::vector<Tagged> all = oldTriples;
    all.insert(all.end(), newTriples.begin(), newTriples.end());
    for (std::size_t j = 0; j < patterns.size(); ++j) {
        DeriveWalk walker{patterns, oldTriples, newTriples, all, closure_, j, out};
        std::set<std::uint64_t> seqs;
        walker.walk(0, Binding{}, seqs);
    }
    return out;
}

BindingSet QueryRuntime::joinAcross(std::size_t forcedPattern,
                                    const BindingSet& forcedBindings) const {
    BindingSet current = seeds_;
    for (std::size_t k = 0; k < windows_.size() && !current.empty(); ++k) {
        const BindingSet& right = k == forcedPattern ? forcedBindings : patternCurrent(k);
        BindingSet next;
        for (const Binding& a : current)
            for (const Binding& b : right)
                if (auto merged = Binding::merge(a, b)) next.insert(std::move(*merged));
        current = std::move(next);
    }
    return current;
}

} // namespace semstream
