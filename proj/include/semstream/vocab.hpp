#pragma once

#include <string>

namespace semstream::vocab {

inline const std::string kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline const std::string kRdfsSubClassOf = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
inline const std::string kRdfsSubPropertyOf = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";

inline const std::string kXsdString = "http://www.w3.org/2001/XMLSchema#string";
inline const std::string kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline const std::string kXsdDateTime = "http://www.w3.org/2001/XMLSchema#dateTime";

// Reserved broker channels. Every node is implicitly subscribed to the
// discovery topic; service frames travel on the per-node service topic.
inline const std::string kDiscoveryTopic = "sys:discovery";
inline const std::string kServiceTopicPrefix = "sys:service/";

// Advertisement / service payload vocabulary.
inline const std::string kSysEvent = "sys:event";
inline const std::string kSysStream = "sys:stream";
inline const std::string kSysMeta = "sys:meta";
inline const std::string kSysRequest = "sys:request";
inline const std::string kSysFrom = "sys:from";

inline std::string serviceTopic(const std::string& nodeId) {
    return kServiceTopicPrefix + nodeId;
}

} // namespace semstream::vocab
