#pragma once

// Space-description files:
//   { "labels": [...], "measures": [[...], ...], "partitions": { "name": [[indices], ...] } }
// Indices are 0-based.

#include "condexp/errors.hpp"
#include "condexp/space.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace condexp {

struct SpaceDescription {
    OutcomeSpace space;
    MeasureFamily family;
    std::map<std::string, Partition> partitions;

    const Partition& partition(const std::string& name) const
    {
        auto it = partitions.find(name);
        if (it == partitions.end()) throw FormatError("space file has no partition named '" + name + "'");
        return it->second;
    }
};

inline SpaceDescription parse_space(const nlohmann::json& j)
{
    if (!j.is_object()) throw FormatError("space file must be a JSON object");
    for (const char* key : {"labels", "measures"}) {
        if (!j.contains(key)) throw FormatError(std::string("space file is missing \"") + key + "\"");
    }
    std::vector<std::string> labels;
    try {
        labels = j.at("labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError("\"labels\" must be an array of strings");
    }
    const std::size_t n = labels.size();

    std::vector<std::vector<double>> rows;
    const auto& measures = j.at("measures");
    if (!measures.is_array()) throw FormatError("\"measures\" must be an array of arrays");
    for (std::size_t g = 0; g < measures.size(); ++g) {
        const auto& row = measures[g];
        if (!row.is_array()) throw FormatError("measures[" + std::to_string(g) + "] is not an array");
        if (row.size() != n) {
            throw FormatError("measures[" + std::to_string(g) + "] has " + std::to_string(row.size()) +
                              " entries, expected " + std::to_string(n));
        }
        std::vector<double> values;
        for (std::size_t w = 0; w < row.size(); ++w) {
            if (!row[w].is_number()) {
                throw FormatError("measures[" + std::to_string(g) + "][" + std::to_string(w) + "] is not a number");
            }
            values.push_back(row[w].get<double>());
        }
        rows.push_back(std::move(values));
    }

    try {
        OutcomeSpace space(std::move(labels));
        MeasureFamily family(std::move(rows));
        std::map<std::string, Partition> partitions;
        if (j.contains("partitions")) {
            const auto& parts = j.at("partitions");
            if (!parts.is_object()) throw FormatError("\"partitions\" must be an object");
            for (const auto& [name, blocks_json] : parts.items()) {
                std::vector<Block> blocks;
                if (!blocks_json.is_array()) throw FormatError("partition '" + name + "' must be an array of blocks");
                for (std::size_t b = 0; b < blocks_json.size(); ++b) {
                    const auto& block = blocks_json[b];
                    if (!block.is_array()) {
                        throw FormatError("partition '" + name + "' block " + std::to_string(b) + " is not an array");
                    }
                    Block out;
                    for (const auto& idx : block) {
                        if (!idx.is_number_integer() || idx.get<long long>() < 0) {
                            throw FormatError("partition '" + name + "' block " + std::to_string(b) +
                                              " has a non-index entry " + idx.dump());
                        }
                        out.push_back(idx.get<Index>());
                    }
                    blocks.push_back(std::move(out));
                }
                try {
                    partitions.emplace(name, Partition(n, std::move(blocks)));
                } catch (const StructuralError& e) {
                    throw FormatError("partition '" + name + "': " + e.what());
                }
            }
        }
        return SpaceDescription{std::move(space), std::move(family), std::move(partitions)};
    } catch (const StructuralError& e) {
        throw FormatError(e.what());
    }
}

inline SpaceDescription parse_space(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("space file is not valid JSON: ") + e.what());
    }
    return parse_space(j);
}

inline SpaceDescription load_space(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open space file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_space(ss.str());
}

inline nlohmann::json to_json(const SpaceDescription& d)
{
    nlohmann::json j;
    j["labels"] = d.space.labels();
    j["measures"] = d.family.rows();
    j["partitions"] = nlohmann::json::object();
    for (const auto& [name, p] : d.partitions) j["partitions"][name] = p.blocks();
    return j;
}

inline void save_space(const SpaceDescription& d, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write space file '" + path + "'");
    out << to_json(d).dump(2) << '\n';
}

} // namespace condexp
