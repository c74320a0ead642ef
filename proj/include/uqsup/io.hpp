#pragma once

// File formats (see FORMAT.md):
//   record files     - one JSON header line, then one JSON record per line
//   supervisor config, evaluation report, rank table, sweep grid - JSON documents
//   plain-text tables for humans, PGM dumps for grids
//
// Floats in record files keep 9 significant digits. Every parse failure is a
// format_error carrying the line (record files) or offending key.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uqsup/analysis.hpp"
#include "uqsup/errors.hpp"
#include "uqsup/metrics.hpp"
#include "uqsup/records.hpp"
#include "uqsup/supervisor.hpp"

namespace uqsup::io {

using json = nlohmann::ordered_json;

inline constexpr int record_format_version = 1;

struct RecordFileHeader {
    int format_version = record_format_version;
    Task task = Task::classification;
    std::size_t num_classes = 0; // classification only
    std::size_t samples_per_record = 1;
    std::map<std::string, std::string> metadata;
};

struct ReadOptions {
    bool validate = true;
    double sum_tolerance = default_sum_tolerance;
};

// ---------------------------------------------------------------------------
// helpers

inline double round_sig9(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

inline json parse_json(std::string_view text, std::size_t line) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw format_error("JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what(), line);
    } catch (const json::exception& e) {
        throw format_error(std::string("JSON parse error: ") + e.what(), line);
    }
}

// Non-finite values are not JSON; they travel as strings.
inline json encode_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline json encode_opt(const std::optional<double>& v) { return v ? encode_real(*v) : json(nullptr); }

inline double decode_real(const json& j, std::string_view key, std::size_t line = 0) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw format_error("key '" + std::string(key) + "' must be a number", line, std::string(key));
}

inline std::optional<double> decode_opt(const json& j, std::string_view key) {
    if (j.is_null()) return std::nullopt;
    return decode_real(j, key);
}

inline const json& require_key(const json& obj, std::string_view key, std::size_t line = 0) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end())
        throw format_error("missing key '" + std::string(key) + "'", line, std::string(key));
    return *it;
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::size_t line = 0) {
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw format_error("unknown key '" + key + "'", line, key);
}

inline json encode_string_map(const std::map<std::string, std::string>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

inline std::map<std::string, std::string> decode_string_map(const json& j, std::string_view key,
                                                            std::size_t line = 0) {
    if (!j.is_object()) throw format_error("'" + std::string(key) + "' must be an object", line, std::string(key));
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string())
            throw format_error("'" + std::string(key) + "." + k + "' must be a string", line, std::string(key) + "." + k);
        out[k] = v.get<std::string>();
    }
    return out;
}

// ---------------------------------------------------------------------------
// record files

inline json header_to_json(const RecordFileHeader& h) {
    json j;
    j["version"] = h.format_version;
    j["task"] = to_string(h.task);
    if (h.task == Task::classification) j["num_classes"] = h.num_classes;
    j["samples_per_record"] = h.samples_per_record;
    j["meta"] = encode_string_map(h.metadata);
    return j;
}

inline RecordFileHeader header_from_json(const json& j, std::size_t line) {
    if (!j.is_object()) throw format_error("header must be a JSON object", line);
    reject_unknown_keys(j, {"version", "task", "num_classes", "samples_per_record", "meta"}, line);
    RecordFileHeader h;
    const json& version = require_key(j, "version", line);
    if (!version.is_number_integer()) throw format_error("'version' must be an integer", line, "version");
    h.format_version = version.get<int>();
    if (h.format_version != record_format_version)
        throw format_error("unsupported format version " + std::to_string(h.format_version), line, "version");
    const json& task = require_key(j, "task", line);
    const auto parsed_task = task.is_string() ? parse_task(task.get<std::string>()) : std::nullopt;
    if (!parsed_task) throw format_error("'task' must be classification or regression", line, "task");
    h.task = *parsed_task;
    if (h.task == Task::classification) {
        const json& c = require_key(j, "num_classes", line);
        if (!c.is_number_unsigned() || c.get<std::size_t>() < 2)
            throw format_error("'num_classes' must be an integer >= 2", line, "num_classes");
        h.num_classes = c.get<std::size_t>();
    }
    const json& t = require_key(j, "samples_per_record", line);
    if (!t.is_number_unsigned() || t.get<std::size_t>() < 1)
        throw format_error("'samples_per_record' must be an integer >= 1", line, "samples_per_record");
    h.samples_per_record = t.get<std::size_t>();
    if (const auto it = j.find("meta"); it != j.end()) h.metadata = decode_string_map(*it, "meta", line);
    return h;
}

inline json record_to_json(const PredictionRecord& r) {
    json j;
    j["id"] = r.input_id;
    json outputs = json::array();
    for (const auto& s : r.outputs) {
        if (const auto* cd = std::get_if<ClassDistribution>(&s)) {
            json probs = json::array();
            for (double p : cd->probs) probs.push_back(round_sig9(p));
            outputs.push_back(std::move(probs));
        } else {
            const auto& rs = std::get<RegressionSample>(s);
            if (rs.variance)
                outputs.push_back(json::array({round_sig9(rs.value), round_sig9(*rs.variance)}));
            else
                outputs.push_back(round_sig9(rs.value));
        }
    }
    j["outputs"] = std::move(outputs);
    if (r.ground_truth) {
        if (const auto* c = std::get_if<std::size_t>(&*r.ground_truth))
            j["label"] = *c;
        else
            j["label"] = round_sig9(std::get<double>(*r.ground_truth));
    }
    j["split"] = to_string(r.split);
    j["source"] = r.source;
    return j;
}

inline PredictionRecord record_from_json(const json& j, const RecordFileHeader& h, std::size_t line) {
    if (!j.is_object()) throw format_error("record must be a JSON object", line);
    reject_unknown_keys(j, {"id", "outputs", "label", "split", "source"}, line);
    PredictionRecord r;

    const json& id = require_key(j, "id", line);
    if (!id.is_string()) throw format_error("'id' must be a string", line, "id");
    r.input_id = id.get<std::string>();

    const json& outputs = require_key(j, "outputs", line);
    if (!outputs.is_array()) throw format_error("'outputs' must be an array", line, "outputs");
    if (outputs.size() != h.samples_per_record)
        throw format_error("record '" + r.input_id + "' has " + std::to_string(outputs.size()) +
                               " samples, header says samples_per_record=" + std::to_string(h.samples_per_record),
                           line, "outputs");
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        const json& s = outputs[t];
        if (h.task == Task::classification) {
            if (!s.is_array() || s.size() != h.num_classes)
                throw format_error("record '" + r.input_id + "' sample " + std::to_string(t) + " has " +
                                       (s.is_array() ? std::to_string(s.size()) : std::string("no")) +
                                       " probabilities, header says num_classes=" + std::to_string(h.num_classes),
                                   line, "outputs");
            ClassDistribution cd;
            for (const json& p : s) {
                if (!p.is_number()) throw format_error("probabilities must be numbers", line, "outputs");
                cd.probs.push_back(p.get<double>());
            }
            r.outputs.emplace_back(std::move(cd));
        } else if (s.is_number()) {
            r.outputs.emplace_back(RegressionSample{s.get<double>(), std::nullopt});
        } else if (s.is_array() && s.size() == 2 && s[0].is_number() && s[1].is_number()) {
            r.outputs.emplace_back(RegressionSample{s[0].get<double>(), s[1].get<double>()});
        } else {
            throw format_error("regression sample must be a number or a [mean, variance] pair", line, "outputs");
        }
    }

    if (const auto it = j.find("label"); it != j.end() && !it->is_null()) {
        if (h.task == Task::classification) {
            if (!it->is_number_unsigned()) throw format_error("'label' must be a class index", line, "label");
            r.ground_truth = it->get<std::size_t>();
        } else {
            if (!it->is_number()) throw format_error("'label' must be a number", line, "label");
            r.ground_truth = it->get<double>();
        }
    }

    const json& split = require_key(j, "split", line);
    const auto parsed_split = split.is_string() ? parse_split(split.get<std::string>()) : std::nullopt;
    if (!parsed_split) throw format_error("'split' must be train, validation or test", line, "split");
    r.split = *parsed_split;

    const json& source = require_key(j, "source", line);
    if (!source.is_string()) throw format_error("'source' must be a string", line, "source");
    r.source = source.get<std::string>();
    return r;
}

inline RecordFileHeader header_for(const Dataset& d) {
    RecordFileHeader h;
    h.metadata = d.metadata;
    if (!d.empty()) {
        const auto& first = d.records.front();
        h.task = first.is_classification() ? Task::classification : Task::regression;
        h.num_classes = first.num_classes();
        h.samples_per_record = first.num_samples();
    } else {
        h.num_classes = 2;
        if (auto it = d.metadata.find("task"); it != d.metadata.end())
            if (auto t = parse_task(it->second)) h.task = *t;
    }
    return h;
}

inline std::string records_to_string(const Dataset& d) {
    const RecordFileHeader h = header_for(d);
    std::string out = header_to_json(h).dump() + "\n";
    for (const auto& r : d.records) {
        if (r.num_samples() != h.samples_per_record)
            throw precondition_error("record '" + r.input_id + "' has T=" + std::to_string(r.num_samples()) +
                                     ", file uses samples_per_record=" + std::to_string(h.samples_per_record));
        out += record_to_json(r).dump() + "\n";
    }
    return out;
}

inline Dataset records_from_string(std::string_view text, const ReadOptions& opts = {}) {
    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && lines[first].find_first_not_of(" \t") == std::string::npos) ++first;
    if (first == lines.size()) throw format_error("empty record file: missing header", 1);
    const RecordFileHeader h = header_from_json(parse_json(lines[first], first + 1), first + 1);

    Dataset d;
    d.metadata = h.metadata;
    std::vector<std::size_t> line_of;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        d.records.push_back(record_from_json(parse_json(lines[i], i + 1), h, i + 1));
        line_of.push_back(i + 1);
    }
    if (opts.validate) {
        const auto violations = validate_dataset(d, opts.sum_tolerance);
        if (!violations.empty()) {
            std::string msg;
            for (const auto& v : violations) {
                if (!msg.empty()) msg += "; ";
                msg += "line " + std::to_string(line_of[v.record_index]) + " ('" + v.input_id + "'): " + v.message;
            }
            throw format_error(msg, line_of[violations.front().record_index]);
        }
    }
    return d;
}

inline Dataset read_records(const std::filesystem::path& path, const ReadOptions& opts = {}) {
    return records_from_string(read_file(path), opts);
}

inline void write_records(const Dataset& d, const std::filesystem::path& path) {
    write_atomic(path, records_to_string(d));
}

// ---------------------------------------------------------------------------
// supervisor config

inline json config_to_json(const SupervisorConfig& c) {
    json j;
    j["quantifier"] = to_string(c.quantifier);
    j["threshold"] = encode_real(c.threshold);
    j["orientation"] = to_string(c.orientation);
    j["epsilon"] = encode_opt(c.epsilon);
    j["mode"] = to_string(c.mode);
    j["achieved_fpr"] = encode_opt(c.achieved_fpr);
    j["calibration_split_size"] = c.calibration_split_size;
    j["degenerate"] = c.degenerate;
    j["fpr_warning"] = c.fpr_warning;
    return j;
}

inline SupervisorConfig config_from_json(const json& j) {
    if (!j.is_object()) throw format_error("supervisor config must be a JSON object");
    reject_unknown_keys(j, {"quantifier", "threshold", "orientation", "epsilon", "mode", "achieved_fpr",
                            "calibration_split_size", "degenerate", "fpr_warning"});
    SupervisorConfig c;
    const json& q = require_key(j, "quantifier");
    const auto qid = q.is_string() ? parse_quantifier(q.get<std::string>()) : std::nullopt;
    if (!qid) throw format_error("unknown quantifier", 0, "quantifier");
    c.quantifier = *qid;
    c.threshold = decode_real(require_key(j, "threshold"), "threshold");
    c.orientation = orientation_of(c.quantifier);
    if (const auto it = j.find("orientation"); it != j.end()) {
        const auto o = it->is_string() ? parse_orientation(it->get<std::string>()) : std::nullopt;
        if (!o) throw format_error("'orientation' must be uncertainty or confidence", 0, "orientation");
        if (*o != c.orientation)
            throw format_error("orientation does not match quantifier " + std::string(to_string(c.quantifier)), 0,
                               "orientation");
    }
    if (const auto it = j.find("epsilon"); it != j.end()) c.epsilon = decode_opt(*it, "epsilon");
    if (const auto it = j.find("mode"); it != j.end()) {
        const auto m = it->is_string() ? parse_mode(it->get<std::string>()) : std::nullopt;
        if (!m) throw format_error("'mode' must be above or at-most", 0, "mode");
        c.mode = *m;
    }
    if (const auto it = j.find("achieved_fpr"); it != j.end()) {
        c.achieved_fpr = decode_opt(*it, "achieved_fpr");
        if (c.achieved_fpr && !(*c.achieved_fpr >= 0.0 && *c.achieved_fpr <= 1.0))
            throw format_error("'achieved_fpr' must lie in [0, 1]", 0, "achieved_fpr");
    }
    if (const auto it = j.find("calibration_split_size"); it != j.end()) {
        if (!it->is_number_unsigned())
            throw format_error("'calibration_split_size' must be a count", 0, "calibration_split_size");
        c.calibration_split_size = it->get<std::size_t>();
    }
    for (auto [key, field] : {std::pair{"degenerate", &c.degenerate}, std::pair{"fpr_warning", &c.fpr_warning}}) {
        if (const auto it = j.find(key); it != j.end()) {
            if (!it->is_boolean()) throw format_error("'" + std::string(key) + "' must be a boolean", 0, key);
            *field = it->get<bool>();
        }
    }
    if (c.epsilon && !(*c.epsilon > 0.0 && *c.epsilon < 1.0))
        throw format_error("'epsilon' must lie in (0, 1)", 0, "epsilon");
    return c;
}

inline SupervisorConfig read_config(const std::filesystem::path& path) {
    return config_from_json(parse_json(read_file(path), 0));
}

inline void write_config(const SupervisorConfig& c, const std::filesystem::path& path) {
    write_atomic(path, config_to_json(c).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// evaluation report

inline json report_to_json(const EvaluationReport& r) {
    json j;
    j["objective"] = r.objective;
    j["unsupervised_objective"] = encode_opt(r.unsupervised_objective);
    j["supervised_objective"] = encode_opt(r.supervised_objective);
    j["acceptance_rate"] = encode_real(r.acceptance_rate);
    json s = json::array();
    for (const auto& [beta, value] : r.s_beta) s.push_back({{"beta", encode_real(beta)}, {"value", encode_opt(value)}});
    j["s_beta"] = std::move(s);
    const auto& b = r.binary;
    j["binary"] = {{"tp", b.tp},
                   {"fp", b.fp},
                   {"tn", b.tn},
                   {"fn", b.fn},
                   {"tpr", encode_opt(b.tpr)},
                   {"fpr", encode_opt(b.fpr)},
                   {"tnr", encode_opt(b.tnr)},
                   {"fnr", encode_opt(b.fnr)},
                   {"precision", encode_opt(b.precision)},
                   {"f1", encode_real(b.f1)},
                   {"acc", encode_real(b.acc)}};
    j["auroc"] = encode_opt(r.auroc);
    j["avgpr"] = encode_opt(r.avgpr);
    j["n_accepted"] = r.n_accepted;
    j["n_rejected"] = r.n_rejected;
    j["n_unlabeled_excluded"] = r.n_unlabeled_excluded;
    j["context"] = encode_string_map(r.context);
    return j;
}

inline std::size_t decode_count(const json& j, std::string_view key) {
    const json& v = require_key(j, key);
    if (!v.is_number_unsigned()) throw format_error("'" + std::string(key) + "' must be a count", 0, std::string(key));
    return v.get<std::size_t>();
}

inline EvaluationReport report_from_json(const json& j) {
    if (!j.is_object()) throw format_error("report must be a JSON object");
    reject_unknown_keys(j, {"objective", "unsupervised_objective", "supervised_objective", "acceptance_rate", "s_beta",
                            "binary", "auroc", "avgpr", "n_accepted", "n_rejected", "n_unlabeled_excluded", "context",
                            "manifest"});
    EvaluationReport r;
    const json& obj = require_key(j, "objective");
    if (!obj.is_string()) throw format_error("'objective' must be a string", 0, "objective");
    r.objective = obj.get<std::string>();
    r.unsupervised_objective = decode_opt(require_key(j, "unsupervised_objective"), "unsupervised_objective");
    r.supervised_objective = decode_opt(require_key(j, "supervised_objective"), "supervised_objective");
    r.acceptance_rate = decode_real(require_key(j, "acceptance_rate"), "acceptance_rate");
    const json& s = require_key(j, "s_beta");
    if (!s.is_array()) throw format_error("'s_beta' must be an array", 0, "s_beta");
    for (const json& e : s) {
        if (!e.is_object()) throw format_error("'s_beta' entries must be objects", 0, "s_beta");
        r.s_beta.emplace_back(decode_real(require_key(e, "beta"), "s_beta.beta"),
                              decode_opt(require_key(e, "value"), "s_beta.value"));
    }
    const json& b = require_key(j, "binary");
    if (!b.is_object()) throw format_error("'binary' must be an object", 0, "binary");
    r.binary.tp = decode_count(b, "tp");
    r.binary.fp = decode_count(b, "fp");
    r.binary.tn = decode_count(b, "tn");
    r.binary.fn = decode_count(b, "fn");
    r.binary.tpr = decode_opt(require_key(b, "tpr"), "binary.tpr");
    r.binary.fpr = decode_opt(require_key(b, "fpr"), "binary.fpr");
    r.binary.tnr = decode_opt(require_key(b, "tnr"), "binary.tnr");
    r.binary.fnr = decode_opt(require_key(b, "fnr"), "binary.fnr");
    r.binary.precision = decode_opt(require_key(b, "precision"), "binary.precision");
    r.binary.f1 = decode_real(require_key(b, "f1"), "binary.f1");
    r.binary.acc = decode_real(require_key(b, "acc"), "binary.acc");
    r.auroc = decode_opt(require_key(j, "auroc"), "auroc");
    r.avgpr = decode_opt(require_key(j, "avgpr"), "avgpr");
    r.n_accepted = decode_count(j, "n_accepted");
    r.n_rejected = decode_count(j, "n_rejected");
    r.n_unlabeled_excluded = decode_count(j, "n_unlabeled_excluded");
    if (const auto it = j.find("context"); it != j.end()) r.context = decode_string_map(*it, "context");
    return r;
}

inline EvaluationReport read_report(const std::filesystem::path& path) {
    return report_from_json(parse_json(read_file(path), 0));
}

inline void write_report(const EvaluationReport& r, const std::filesystem::path& path,
                         const std::optional<json>& manifest = std::nullopt) {
    json j = report_to_json(r);
    if (manifest) j["manifest"] = *manifest;
    write_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// rank tables and grids

inline json rank_table_to_json(const RankTable& t) {
    json j;
    j["rows"] = t.rows;
    j["columns"] = t.columns;
    json ranks = json::array();
    for (const auto& row : t.ranks) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(encode_opt(cell));
        ranks.push_back(std::move(r));
    }
    j["ranks"] = std::move(ranks);
    j["average_rank"] = t.average_rank;
    j["n"] = t.n;
    return j;
}

inline RankTable rank_table_from_json(const json& j) {
    if (!j.is_object()) throw format_error("rank table must be a JSON object");
    reject_unknown_keys(j, {"rows", "columns", "ranks", "average_rank", "n"});
    RankTable t;
    try {
        t.rows = require_key(j, "rows").get<std::vector<std::string>>();
        t.columns = require_key(j, "columns").get<std::vector<std::string>>();
        t.average_rank = require_key(j, "average_rank").get<std::vector<double>>();
        t.n = require_key(j, "n").get<std::vector<std::size_t>>();
    } catch (const json::type_error& e) {
        throw format_error(std::string("rank table field has the wrong type: ") + e.what());
    }
    for (const json& row : require_key(j, "ranks")) {
        std::vector<std::optional<double>> r;
        for (const json& cell : row) r.push_back(decode_opt(cell, "ranks"));
        t.ranks.push_back(std::move(r));
    }
    if (t.ranks.size() != t.rows.size() || t.average_rank.size() != t.rows.size() || t.n.size() != t.rows.size())
        throw format_error("rank table rows are inconsistent", 0, "ranks");
    return t;
}

inline json grid_to_json(const Grid& g) {
    json rows = json::array();
    for (std::size_t r = 0; r < g.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < g.cols; ++c) row.push_back(encode_opt(g.at(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Grid grid_from_json(const json& j, std::string_view key) {
    if (!j.is_array()) throw format_error("'" + std::string(key) + "' must be an array of rows", 0, std::string(key));
    Grid g(j.size(), j.empty() ? 0 : j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != g.cols)
            throw format_error("'" + std::string(key) + "' is not rectangular", 0, std::string(key));
        for (std::size_t c = 0; c < g.cols; ++c) g.at(r, c) = decode_opt(j[r][c], key);
    }
    return g;
}

inline json sweep_grid_to_json(const SweepGrid& g) {
    json j;
    j["metric"] = g.metric;
    j["axis1"] = g.axis1;
    j["axis2"] = g.axis2;
    j["values"] = grid_to_json(g.values);
    j["meta"] = encode_string_map(g.metadata);
    return j;
}

inline SweepGrid sweep_grid_from_json(const json& j) {
    if (!j.is_object()) throw format_error("sweep grid must be a JSON object");
    reject_unknown_keys(j, {"metric", "axis1", "axis2", "values", "meta"});
    SweepGrid g;
    const json& metric = require_key(j, "metric");
    if (!metric.is_string()) throw format_error("'metric' must be a string", 0, "metric");
    g.metric = metric.get<std::string>();
    try {
        g.axis1 = require_key(j, "axis1").get<std::vector<long>>();
        g.axis2 = require_key(j, "axis2").get<std::vector<long>>();
    } catch (const json::type_error&) {
        throw format_error("grid axes must be integer lists", 0, "axis1");
    }
    g.values = grid_from_json(require_key(j, "values"), "values");
    if (g.values.rows != g.axis1.size() || (g.values.rows && g.values.cols != g.axis2.size()))
        throw format_error("grid values do not match the axes", 0, "values");
    g.values.cols = g.axis2.size();
    g.values.cells.resize(g.values.rows * g.values.cols);
    if (const auto it = j.find("meta"); it != j.end()) g.metadata = decode_string_map(*it, "meta");
    return g;
}

inline SweepGrid read_sweep_grid(const std::filesystem::path& path) {
    return sweep_grid_from_json(parse_json(read_file(path), 0));
}

inline void write_sweep_grid(const SweepGrid& g, const std::filesystem::path& path) {
    write_atomic(path, sweep_grid_to_json(g).dump(2) + "\n");
}

// Binary grayscale PGM scaled linearly from min to max; holes are black.
inline std::string grid_to_pgm(const Grid& g) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : g.cells)
        if (v) {
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    std::string out = "P5\n" + std::to_string(g.cols) + " " + std::to_string(g.rows) + "\n255\n";
    for (const auto& v : g.cells) {
        unsigned char px = 0;
        if (v) px = hi > lo ? static_cast<unsigned char>(std::lround(255.0 * (*v - lo) / (hi - lo))) : 128;
        out.push_back(static_cast<char>(px));
    }
    return out;
}

// ---------------------------------------------------------------------------
// plain-text tables

inline std::string fixed(const std::optional<double>& v, int decimals = 4) {
    if (!v) return "undef";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(decimals) << *v;
    return ss.str();
}

// ACC | ACC-bar | Delta_u | S_1, one line, as in the evaluation tables.
inline std::string table_row(const EvaluationReport& r, int decimals = 4) {
    std::ostringstream ss;
    ss << "ACC " << fixed(r.unsupervised_objective, decimals) << " | ACC_bar " << fixed(r.supervised_objective, decimals)
       << " | Delta_u " << fixed(r.acceptance_rate, decimals) << " | S_1 " << fixed(r.s_at(1.0), decimals);
    return ss.str();
}

// One row per report; reports are grouped into per-epsilon column blocks.
inline std::string report_table(const std::vector<EvaluationReport>& reports, int decimals = 4) {
    const auto ctx = [](const EvaluationReport& r, const char* key, const char* fallback) {
        const auto it = r.context.find(key);
        return it == r.context.end() ? std::string(fallback) : it->second;
    };
    std::vector<std::string> epsilons, rows;
    for (const auto& r : reports) {
        const auto eps = ctx(r, "epsilon", "-"), row = ctx(r, "quantifier", "?");
        if (std::find(epsilons.begin(), epsilons.end(), eps) == epsilons.end()) epsilons.push_back(eps);
        if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    }
    const int w = std::max(decimals + 4, 9);
    const int block = 3 * w;
    std::ostringstream ss;
    ss << std::left << std::setw(12) << "quantifier" << std::setw(w) << "ACC";
    for (const auto& e : epsilons) ss << "| " << std::setw(block) << ("eps=" + e);
    ss << "\n" << std::setw(12) << "" << std::setw(w) << "";
    for (std::size_t i = 0; i < epsilons.size(); ++i)
        ss << "| " << std::setw(w) << "ACC_bar" << std::setw(w) << "Delta_u" << std::setw(w) << "S_1";
    ss << "\n";
    for (const auto& row : rows) {
        std::optional<double> acc;
        for (const auto& r : reports)
            if (ctx(r, "quantifier", "?") == row) acc = r.unsupervised_objective;
        ss << std::setw(12) << row << std::setw(w) << fixed(acc, decimals);
        for (const auto& e : epsilons) {
            const EvaluationReport* found = nullptr;
            for (const auto& r : reports)
                if (ctx(r, "quantifier", "?") == row && ctx(r, "epsilon", "-") == e) found = &r;
            if (!found) {
                ss << "| " << std::setw(block) << "-";
                continue;
            }
            ss << "| " << std::setw(w) << fixed(found->supervised_objective, decimals) << std::setw(w)
               << fixed(found->acceptance_rate, decimals) << std::setw(w) << fixed(found->s_at(1.0), decimals);
        }
        ss << "\n";
    }
    return ss.str();
}

// Average ranks; the best (lowest) rank in each column is wrapped in **...**.
inline std::string rank_table_text(const RankTable& t) {
    std::size_t w = 8;
    for (const auto& r : t.rows) w = std::max(w, r.size() + 2);
    std::vector<double> best(t.columns.size(), std::numeric_limits<double>::infinity());
    for (const auto& row : t.ranks)
        for (std::size_t c = 0; c < row.size(); ++c)
            if (row[c]) best[c] = std::min(best[c], *row[c]);
    double best_avg = std::numeric_limits<double>::infinity();
    for (double a : t.average_rank) best_avg = std::min(best_avg, a);

    const auto cell = [](std::optional<double> v, bool bold) {
        std::string s = v ? fixed(v, 2) : std::string("-");
        return bold ? "**" + s + "**" : s;
    };
    std::ostringstream ss;
    ss << std::left << std::setw(static_cast<int>(w)) << "row";
    for (const auto& c : t.columns) ss << std::setw(static_cast<int>(std::max<std::size_t>(c.size(), 8) + 2)) << c;
    ss << std::setw(10) << "avg" << "N\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ss << std::setw(static_cast<int>(w)) << t.rows[r];
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            ss << std::setw(static_cast<int>(std::max<std::size_t>(t.columns[c].size(), 8) + 2))
               << cell(t.ranks[r][c], t.ranks[r][c] && *t.ranks[r][c] == best[c]);
        ss << std::setw(10) << cell(t.average_rank[r], t.average_rank[r] == best_avg) << t.n[r] << "\n";
    }
    return ss.str();
}

} // namespace uqsup::io
