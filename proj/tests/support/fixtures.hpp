#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "semstream/term.hpp"

namespace semstream::testing {

/// Absolute path of a checked-in fixture.
inline std::string repoPath(const std::string& relative) {
    return std::string(SEMSTREAM_REPO_DIR) + "/" + relative;
}

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Demo vocabulary shared by tests and the bundled scenarios.
inline const std::string kBase = "http://example.org/fleet#";
inline const std::string kSsr = "http://example.org/ssr#";
inline const std::string kSsn = "http://www.w3.org/ns/ssn/";
inline const std::string kSosa = "http://www.w3.org/ns/sosa/";

inline Term demoIri(const std::string& local) { return Term::iri(kBase + local); }
inline Term ssrIri(const std::string& local) { return Term::iri(kSsr + local); }
inline Term ssnIri(const std::string& local) { return Term::iri(kSsn + local); }
inline Term sosaIri(const std::string& local) { return Term::iri(kSosa + local); }
inline Term rdfType() { return Term::iri(semstream::vocab::kRdfType); }

} // namespace semstream::testing
