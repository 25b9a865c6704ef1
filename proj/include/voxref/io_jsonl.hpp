#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "embedding.hpp"
#include "error.hpp"

namespace voxref {

namespace detail {

inline UtteranceRecord parse_jsonl_record(const std::string& text, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        // number overflow (1e999) lands here too, as out_of_range
        throw IngestError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw IngestError(line_no, "record is not a JSON object");

    auto str_field = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string())
            throw IngestError(line_no, std::string("missing or non-string field '") + key + "'");
        return it->get<std::string>();
    };

    UtteranceRecord rec;
    rec.utterance_id = str_field("utterance_id");
    rec.identity_id = str_field("identity_id");
    rec.dataset_tag = str_field("dataset");
    try {
        rec.label = parse_label(str_field("label"));
    } catch (const IngestError&) {
        throw;
    } catch (const Error& e) {
        throw IngestError(line_no, e.what());
    }

    auto emb = j.find("embedding");
    if (emb == j.end() || !emb->is_array())
        throw IngestError(line_no, "missing or non-array field 'embedding'");
    std::vector<float> values;
    values.reserve(emb->size());
    for (const auto& v : *emb) {
        if (!v.is_number()) throw IngestError(line_no, "embedding contains a non-numeric entry");
        values.push_back(static_cast<float>(v.get<double>()));
    }
    try {
        rec.embedding = Embedding(std::move(values));
    } catch (const Error& e) {
        throw IngestError(line_no, e.what());
    }
    return rec;
}

inline void append_float(std::string& out, float v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace detail

/// Reads one record per line. Blank lines are skipped but still counted, so
/// error line numbers match what an editor shows.
inline EmbeddingStore read_jsonl(std::istream& in, std::string model_name = {}) {
    EmbeddingStore store(std::move(model_name));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        UtteranceRecord rec = detail::parse_jsonl_record(line, line_no);
        try {
            store.append(std::move(rec));
        } catch (const IngestError&) {
            throw;
        } catch (const Error& e) {
            throw IngestError(line_no, e.what());
        }
    }
    return store;
}

inline EmbeddingStore ingest_jsonl(const std::filesystem::path& path, std::string model_name = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return read_jsonl(in, std::move(model_name));
}

/// Serializes one record as a single JSON line (no trailing newline).
/// Floats use the shortest representation that reads back to the same bits.
inline std::string to_jsonl_line(const UtteranceRecord& r) {
    std::string out = "{\"utterance_id\":";
    out += nlohmann::json(r.utterance_id).dump();
    out += ",\"identity_id\":";
    out += nlohmann::json(r.identity_id).dump();
    out += ",\"label\":\"";
    out += to_string(r.label);
    out += "\",\"dataset\":";
    out += nlohmann::json(r.dataset_tag).dump();
    out += ",\"embedding\":[";
    bool first = true;
    for (float v : r.embedding.values()) {
        if (!first) out += ',';
        first = false;
        detail::append_float(out, v);
    }
    out += "]}";
    return out;
}

inline void write_jsonl(std::ostream& out, const EmbeddingStore& store) {
    for (const auto& r : store.records()) out << to_jsonl_line(r) << '\n';
}

inline void write_jsonl(const std::filesystem::path& path, const EmbeddingStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_jsonl(out, store);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace voxref
