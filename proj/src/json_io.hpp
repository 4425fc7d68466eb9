#pragma once
// JSON encodings shared by the store files and the HTTP service.

#include "json.hpp"
#include "regkg/common.hpp"
#include "regkg/triplet.hpp"

namespace regkg::detail {

inline nlohmann::json key_to_json(const TripletKey& k) {
    return nlohmann::json::array({k.subject, k.predicate, k.object});
}

inline TripletKey key_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw CorruptStoreError("malformed triplet key");
    return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
}

inline nlohmann::json triplet_to_json(const Triplet& t) {
    nlohmann::json j;
    j["s"] = t.subject;
    j["p"] = t.predicate;
    j["o"] = t.object;
    j["qualifiers"] = t.qualifiers;
    j["confidence"] = t.confidence;
    j["extractor"] = std::string(to_string(t.extractor));
    return j;
}

inline Triplet triplet_from_json(const nlohmann::json& j) {
    Triplet t;
    t.subject = j.at("s").get<std::string>();
    t.predicate = j.at("p").get<std::string>();
    t.object = j.at("o").get<std::string>();
    t.qualifiers = j.at("qualifiers").get<std::map<std::string, std::string>>();
    t.confidence = j.at("confidence").get<double>();
    auto kind = extractor_from_string(j.at("extractor").get<std::string>());
    if (!kind) throw CorruptStoreError("unknown extractor kind");
    t.extractor = *kind;
    return t;
}

}  // namespace regkg::detail
