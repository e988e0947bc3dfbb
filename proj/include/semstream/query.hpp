#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semstream/pattern.hpp"
#include "semstream/prefixes.hpp"

namespace semstream {

struct RangeWindow {
    std::int64_t rangeMs = 0;
    Term onPredicate;  // always an IRI

    friend bool operator==(const RangeWindow& a, const RangeWindow& b) {
        return a.rangeMs == b.rangeMs && a.onPredicate == b.onPredicate;
    }
};

/// One STREAM block: which stream(s) to read, the sliding window, and the
/// patterns evaluated inside it.
struct StreamPattern {
    PatternTerm selector;  // ground IRI or variable
    RangeWindow window;
    std::vector<TriplePattern> patterns;

    friend bool operator==(const StreamPattern& a, const StreamPattern& b) {
        return a.selector == b.selector && a.window == b.window && a.patterns == b.patterns;
    }
};

struct QueryAST {
    enum class Form { Select, Construct };

    std::optional<Term> registerIri;
    Form form = Form::Select;
    std::vector<std::string> selectVars;            // Select form
    std::vector<TriplePattern> constructTemplates;  // Construct form
    std::vector<StreamPattern> streamPatterns;
    std::vector<TriplePattern> staticPatterns;

    friend bool operator==(const QueryAST& a, const QueryAST& b) {
        return a.registerIri == b.registerIri && a.form == b.form &&
               a.selectVars == b.selectVars && a.constructTemplates == b.constructTemplates &&
               a.streamPatterns == b.streamPatterns && a.staticPatterns == b.staticPatterns;
    }
};

/// Parses one query. PREFIX declarations in the text extend (and may
/// override) `ambient`. Throws QuerySyntaxError / QueryValidationError.
QueryAST parseQuery(const std::string& text, const PrefixTable& ambient = {});

/// Canonical text form: parseQuery(prettyPrint(ast)) is structurally `ast`.
std::string prettyPrint(const QueryAST& ast);

/// Stable multi-line description, used for snapshot tests and `parse` output.
std::string toDebugString(const QueryAST& ast);

/// Parses triples written in the query surface syntax (prefixed names, 'a',
/// quoted triples, optional dots, comments) into a ground graph. Variables
/// are rejected. Used for knowledge-graph and metadata fixtures.
Graph parseGroundGraph(const std::string& text, const PrefixTable& ambient = {});

} // namespace semstream
