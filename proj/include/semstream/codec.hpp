#pragma once

#include <string>
#include <string_view>

#include "semstream/pattern.hpp"
#include "semstream/term.hpp"

namespace semstream {

// Line-oriented RDF-star exchange format: one triple per line, absolute IRIs
// in angle brackets, literals always carry `^^<datatype>`, quoted triples as
// `<< s p o >>`. The canonical encoding sorts lines bytewise and ends with a
// newline (empty graph encodes to the empty payload). See docs/message-format.md.

/// Canonical text form of one term.
std::string serializeTerm(const Term& term);

/// "S P O" without the trailing dot.
std::string serializeTriple(const Triple& triple);

/// Canonical payload; deterministic, decode(encode(g)) == g.
std::string encode(const Graph& graph);

/// Parses a payload. Tolerates blank lines, full-line `#` comments and
/// duplicate triples. Throws CodecParseError with a 1-based line number.
Graph decode(std::string_view text);

/// Sorted `?var=term` pairs, space-separated; used for result logs.
std::string serializeBinding(const Binding& binding);

} // namespace semstream
