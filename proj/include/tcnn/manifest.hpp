#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tcnn {

// Surface condition classes, ordered by severity.
enum class Label { nd = 0, mc = 1, ac = 2 };

inline const char* label_name(Label l) {
    switch (l) {
        case Label::nd: return "ND";
        case Label::mc: return "MC";
        case Label::ac: return "AC";
    }
    throw std::invalid_argument("unknown label value");
}

inline Label label_from_string(const std::string& s) {
    if (s == "ND") return Label::nd;
    if (s == "MC") return Label::mc;
    if (s == "AC") return Label::ac;
    throw std::invalid_argument("unknown label: " + s);
}

inline constexpr std::size_t label_count = 3;

struct PatchRecord {
    std::string path;
    Label label = Label::nd;
    std::string source_id;
    std::size_t patch_index = 0;
    std::string split;  // empty until a split assigns one

    friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

using DatasetManifest = std::vector<PatchRecord>;

// JSON Lines, one record per patch. nlohmann::json keeps keys sorted, so the
// byte layout is stable across runs.
inline void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("manifest: cannot open " + path);
    for (const auto& rec : manifest) {
        nlohmann::json j;
        j["path"] = rec.path;
        j["label"] = label_name(rec.label);
        j["source_id"] = rec.source_id;
        j["patch_index"] = rec.patch_index;
        j["split"] = rec.split;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

inline DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    DatasetManifest manifest;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("manifest: bad json on line " + std::to_string(line_no) + ": " + e.what());
        }
        PatchRecord rec;
        try {
            rec.path = j.at("path").get<std::string>();
            rec.label = label_from_string(j.at("label").get<std::string>());
            rec.source_id = j.at("source_id").get<std::string>();
            rec.patch_index = j.at("patch_index").get<std::size_t>();
            rec.split = j.value("split", std::string());
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("manifest: missing field on line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("manifest: bad value on line " + std::to_string(line_no) + ": " + e.what());
        }
        manifest.push_back(std::move(rec));
    }
    return manifest;
}

// Unique source ids in first-seen order, with their labels.
struct SourceEntry {
    std::string id;
    Label label;
};

inline std::vector<SourceEntry> list_sources(const DatasetManifest& manifest) {
    std::vector<SourceEntry> sources;
    for (const auto& rec : manifest) {
        bool seen = false;
        for (const auto& s : sources)
            if (s.id == rec.source_id) {
                if (s.label != rec.label)
                    throw std::invalid_argument("manifest: source " + rec.source_id + " has conflicting labels");
                seen = true;
                break;
            }
        if (!seen) sources.push_back({rec.source_id, rec.label});
    }
    return sources;
}

}  // namespace tcnn
