#include "semstream/pattern.hpp"

namespace semstream {

PatternTerm PatternTerm::ground(Term t) {
    PatternTerm p;
    p.kind_ = Kind::Ground;
    p.term_ = std::move(t);
    return p;
}

PatternTerm PatternTerm::var(std::string name) {
    if (name.empty())
        throw Error("variable name must be non-empty");
    PatternTerm p;
    p.kind_ = Kind::Var;
    p.var_ = std::move(name);
    return p;
}

PatternTerm PatternTerm::quotedPattern(TriplePattern inner) {
    PatternTerm p;
    p.kind_ = Kind::QuotedPattern;
    p.quoted_ = std::make_shared<const TriplePattern>(std::move(inner));
    return p;
}

int PatternTerm::compare(const PatternTerm& other) const {
    if (kind_ != other.kind_)
        return static_cast<int>(kind_) < static_cast<int>(other.kind_) ? -1 : 1;
    switch (kind_) {
    case Kind::Ground:
        return term_.compare(other.term_);
    case Kind::Var:
        return var_.compare(other.var_);
    case Kind::QuotedPattern:
        if (quoted_ == other.quoted_)
            return 0;
        return quoted_->compare(*other.quoted_);
    }
    return 0;
}

int TriplePattern::compare(const TriplePattern& other) const {
    int c = subject.compare(other.subject);
    if (c != 0)
        return c;
    c = predicate.compare(other.predicate);
    if (c != 0)
        return c;
    return object.compare(other.object);
}

const Term* Binding::lookup(const std::string& name) const {
    auto it = map_.find(name);
    return it == map_.end() ? nullptr : &it->second;
}

bool Binding::bind(const std::string& name, const Term& value) {
    auto [it, inserted] = map_.emplace(name, value);
    return inserted || it->second == value;
}

std::optional<Binding> Binding::merge(const Binding& a, const Binding& b) {
    Binding out = a;
    for (const auto& [name, value] : b.map_)
        if (!out.bind(name, value))
            return std::nullopt;
    return out;
}

bool Binding::subsumes(const Binding& sub) const {
    for (const auto& [name, value] : sub.map_) {
        const Term* mine = lookup(name);
        if (mine == nullptr || *mine != value)
            return false;
    }
    return true;
}

int Binding::compare(const Binding& other) const {
    auto a = map_.begin();
    auto b = other.map_.begin();
    for (; a != map_.end() && b != other.map_.end(); ++a, ++b) {
        int c = a->first.compare(b->first);
        if (c != 0)
            return c;
        c = a->second.compare(b->second);
        if (c != 0)
            return c;
    }
    if (a != map_.end())
        return 1;
    if (b != other.map_.end())
        return -1;
    return 0;
}

bool unify(const PatternTerm& pattern, const Term& term, Binding& binding) {
    switch (pattern.kind()) {
    case PatternTerm::Kind::Ground:
        return pattern.term() == term;
    case PatternTerm::Kind::Var:
        return binding.bind(pattern.varName(), term);
    case PatternTerm::Kind::QuotedPattern: {
        if (!term.isQuoted())
            return false;
        const Triple& inner = term.quotedTriple();
        const TriplePattern& p = pattern.quoted();
        return unify(p.subject, inner.subject, binding) &&
               unify(p.predicate, inner.predicate, binding) &&
               unify(p.object, inner.object, binding);
    }
    }
    return false;
}

BindingSet match(const TriplePattern& pattern, const Graph& graph, const Binding& seed) {
    BindingSet out;
    for (const Triple& t : graph) {
        Binding b = seed;
        if (unify(pattern.subject, t.subject, b) && unify(pattern.predicate, t.predicate, b) &&
            unify(pattern.object, t.object, b))
            out.insert(std::move(b));
    }
    return out;
}

BindingSet matchBGP(const std::vector<TriplePattern>& patterns, const Graph& graph,
                    const Binding& seed) {
    BindingSet current{seed};
    for (const TriplePattern& p : patterns) {
        BindingSet next;
        for (const Binding& b : current) {
            BindingSet extensions = match(p, graph, b);
            next.insert(extensions.begin(), extensions.end());
        }
        if (next.empty())
            return {};
        current = std::move(next);
    }
    return current;
}

namespace {

Term substituteTerm(const PatternTerm& p, const Binding& binding) {
    switch (p.kind()) {
    case PatternTerm::Kind::Ground:
        return p.term();
    case PatternTerm::Kind::Var: {
        const Term* value = binding.lookup(p.varName());
        if (value == nullptr)
            throw UnboundVariableError(p.varName());
        return *value;
    }
    case PatternTerm::Kind::QuotedPattern:
        return Term::quoted(substituteTriple(p.quoted(), binding));
    }
    throw Error("unreachable");
}

} // namespace

Triple substituteTriple(const TriplePattern& row, const Binding& binding) {
    return Triple(substituteTerm(row.subject, binding), substituteTerm(row.predicate, binding),
                  substituteTerm(row.object, binding));
}

Graph substitute(const std::vector<TriplePattern>& tmpl, const Binding& binding) {
    Graph out;
    for (const TriplePattern& row : tmpl)
        out.insert(substituteTriple(row, binding));
    return out;
}

void collectVariables(const TriplePattern& pattern, std::set<std::string>& out) {
    for (const PatternTerm* p : {&pattern.subject, &pattern.predicate, &pattern.object}) {
        if (p->isVar())
            out.insert(p->varName());
        else if (p->isQuotedPattern())
            collectVariables(p->quoted(), out);
    }
}

std::set<std::string> collectVariables(const std::vector<TriplePattern>& patterns) {
    std::set<std::string> out;
    for (const TriplePattern& p : patterns)
        collectVariables(p, out);
    return out;
}

} // namespace semstream
