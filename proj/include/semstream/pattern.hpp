#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semstream/term.hpp"

namespace semstream {

struct TriplePattern;

/// One position of a triple pattern: a ground term, a variable, or a nested
/// triple pattern (quoted-triple pattern in term position).
class PatternTerm {
public:
    enum class Kind { Ground, Var, QuotedPattern };

    PatternTerm() : kind_(Kind::Ground) {}

    static PatternTerm ground(Term t);
    static PatternTerm var(std::string name);
    static PatternTerm quotedPattern(TriplePattern inner);

    Kind kind() const { return kind_; }
    bool isGround() const { return kind_ == Kind::Ground; }
    bool isVar() const { return kind_ == Kind::Var; }
    bool isQuotedPattern() const { return kind_ == Kind::QuotedPattern; }

    const Term& term() const { return term_; }
    const std::string& varName() const { return var_; }
    const TriplePattern& quoted() const { return *quoted_; }

    int compare(const PatternTerm& other) const;
    friend bool operator==(const PatternTerm& a, const PatternTerm& b) { return a.compare(b) == 0; }
    friend bool operator<(const PatternTerm& a, const PatternTerm& b) { return a.compare(b) < 0; }

private:
    Kind kind_;
    Term term_;
    std::string var_;
    std::shared_ptr<const TriplePattern> quoted_;
};

struct TriplePattern {
    PatternTerm subject;
    PatternTerm predicate;
    PatternTerm object;

    TriplePattern() = default;
    TriplePattern(PatternTerm s, PatternTerm p, PatternTerm o)
        : subject(std::move(s)), predicate(std::move(p)), object(std::move(o)) {}

    int compare(const TriplePattern& other) const;
    friend bool operator==(const TriplePattern& a, const TriplePattern& b) {
        return a.compare(b) == 0;
    }
    friend bool operator<(const TriplePattern& a, const TriplePattern& b) {
        return a.compare(b) < 0;
    }
};

/// Partial map from variable names to terms. Two bindings merge iff they
/// agree on every shared variable.
class Binding {
public:
    using Map = std::map<std::string, Term>;

    Binding() = default;

    bool bound(const std::string& name) const { return map_.count(name) != 0; }
    const Term* lookup(const std::string& name) const;

    /// Returns false (and leaves the binding untouched) on a conflicting
    /// rebind; binding an identical value is a no-op success.
    bool bind(const std::string& name, const Term& value);

    static std::optional<Binding> merge(const Binding& a, const Binding& b);

    /// True if every entry of `sub` appears in this binding with an equal value.
    bool subsumes(const Binding& sub) const;

    const Map& entries() const { return map_; }
    std::size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }

    int compare(const Binding& other) const;
    friend bool operator==(const Binding& a, const Binding& b) { return a.compare(b) == 0; }
    friend bool operator!=(const Binding& a, const Binding& b) { return a.compare(b) != 0; }
    friend bool operator<(const Binding& a, const Binding& b) { return a.compare(b) < 0; }

private:
    Map map_;
};

using BindingSet = std::set<Binding>;

/// Structural unification of one pattern position against a term, extending
/// `binding` in place. Returns false (binding possibly half-extended) on
/// mismatch; callers pass a copy.
bool unify(const PatternTerm& pattern, const Term& term, Binding& binding);

/// Every extension of `seed` that maps `pattern` onto some triple of `graph`.
BindingSet match(const TriplePattern& pattern, const Graph& graph, const Binding& seed = {});

/// Natural join of the per-pattern match sets; order-independent result.
BindingSet matchBGP(const std::vector<TriplePattern>& patterns, const Graph& graph,
                    const Binding& seed = {});

/// Instantiates one template row. Throws UnboundVariableError.
Triple substituteTriple(const TriplePattern& row, const Binding& binding);

/// Instantiates a whole template. Throws UnboundVariableError on the first
/// row with an unbound variable.
Graph substitute(const std::vector<TriplePattern>& tmpl, const Binding& binding);

/// All variable names occurring in a pattern (recursing into quoted patterns).
void collectVariables(const TriplePattern& pattern, std::set<std::string>& out);
std::set<std::string> collectVariables(const std::vector<TriplePattern>& patterns);

} // namespace semstream
