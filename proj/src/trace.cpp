#include "profet/trace.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace profet {

using nlohmann::json;

namespace {

std::string at_line(const std::string& msg, std::size_t line) {
    if (line == 0) return msg;
    return msg + " (line " + std::to_string(line) + ")";
}

}  // namespace

void validate(const RawTraceRecord& rec, std::size_t line) {
    if (rec.op_name.empty()) throw ValidationError(at_line("empty op name", line));
    if (!std::isfinite(rec.latency_us))
        throw ValidationError(at_line("non-finite latency for op '" + rec.op_name + "'", line));
    if (rec.latency_us < 0.0)
        throw ValidationError(at_line("negative latency for op '" + rec.op_name + "'", line));
}

namespace {

RawTraceRecord record_from_json(const json& obj, std::size_t line) {
    RawTraceRecord rec;
    const auto& op = obj.at("op");
    if (!op.is_string()) throw ParseError("field 'op' must be a string", line);
    rec.op_name = op.get<std::string>();
    auto lat = obj.find("latency_us");
    if (lat == obj.end()) throw ParseError("missing field 'latency_us'", line);
    if (!lat->is_number()) throw ParseError("field 'latency_us' must be a number", line);
    rec.latency_us = lat->get<double>();
    auto det = obj.find("detail");
    if (det != obj.end() && !det->is_null()) {
        if (!det->is_string()) throw ParseError("field 'detail' must be a string", line);
        rec.op_detail = det->get<std::string>();
    }
    validate(rec, line);
    return rec;
}

TraceDocument parse_jsonl(std::string_view raw) {
    TraceDocument doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t end = raw.find('\n', pos);
        std::string_view line = (end == std::string_view::npos)
                                    ? raw.substr(pos)
                                    : raw.substr(pos, end - pos);
        pos = (end == std::string_view::npos) ? raw.size() + 1 : end + 1;
        ++line_no;
        // Tolerate CRLF input.
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) throw ParseError("malformed JSON object", line_no);
        if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
        if (obj.contains("op")) {
            doc.records.push_back(record_from_json(obj, line_no));
        } else if (obj.contains("meta")) {
            const auto& meta = obj.at("meta");
            if (!meta.is_object()) throw ParseError("field 'meta' must be an object", line_no);
            for (const auto& [k, v] : meta.items()) {
                if (!v.is_string()) throw ParseError("meta values must be strings", line_no);
                doc.meta[k] = v.get<std::string>();
            }
        } else {
            throw ParseError("object has neither 'op' nor 'meta'", line_no);
        }
    }
    return doc;
}

// RFC-4180 field splitter. Returns one row per record and the line number
// each record started on (quoted fields may span lines).
struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line;
};

std::vector<CsvRow> split_csv(std::string_view raw) {
    std::vector<CsvRow> rows;
    std::size_t line_no = 1;
    std::size_t i = 0;
    while (i < raw.size()) {
        CsvRow row;
        row.line = line_no;
        std::string field;
        bool quoted = false;
        bool any = false;
        for (;; ++i) {
            if (i >= raw.size()) {
                row.fields.push_back(std::move(field));
                break;
            }
            char c = raw[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < raw.size() && raw[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line_no;
                    field += c;
                }
            } else if (c == '"' && field.empty() && !any) {
                quoted = true;
                any = true;
            } else if (c == ',') {
                row.fields.push_back(std::move(field));
                field.clear();
                any = false;
            } else if (c == '\n' || (c == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n')) {
                if (c == '\r') ++i;
                ++line_no;
                ++i;
                row.fields.push_back(std::move(field));
                break;
            } else {
                field += c;
                any = true;
            }
        }
        if (quoted) throw ParseError("unterminated quoted field", row.line);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

TraceDocument parse_csv(std::string_view raw) {
    TraceDocument doc;
    auto rows = split_csv(raw);
    if (rows.empty()) return doc;
    const auto& header = rows.front().fields;
    if (header.size() != 3 || header[0] != "op" || header[1] != "latency_us" ||
        header[2] != "detail") {
        throw ParseError("expected header 'op,latency_us,detail'", rows.front().line);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;  // trailing blank line
        if (row.fields.size() != 3)
            throw ParseError("expected 3 columns, got " + std::to_string(row.fields.size()),
                             row.line);
        RawTraceRecord rec;
        rec.op_name = row.fields[0];
        try {
            std::size_t used = 0;
            rec.latency_us = std::stod(row.fields[1], &used);
            if (used != row.fields[1].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("latency_us is not a number: '" + row.fields[1] + "'", row.line);
        }
        if (!row.fields[2].empty()) rec.op_detail = row.fields[2];
        validate(rec, row.line);
        doc.records.push_back(std::move(rec));
    }
    return doc;
}

}  // namespace

TraceDocument parse_trace(std::string_view raw, TraceFormat format) {
    switch (format) {
        case TraceFormat::Jsonl: return parse_jsonl(raw);
        case TraceFormat::Csv: return parse_csv(raw);
    }
    throw ValidationError("unknown trace format");
}

std::string serialize_trace(const TraceDocument& doc, TraceFormat format) {
    std::string out;
    if (format == TraceFormat::Jsonl) {
        if (!doc.meta.empty()) {
            json meta = json::object();
            for (const auto& [k, v] : doc.meta) meta[k] = v;
            out += json{{"meta", meta}}.dump();
            out += '\n';
        }
        for (const auto& rec : doc.records) {
            json obj;
            obj["op"] = rec.op_name;
            obj["latency_us"] = rec.latency_us;
            if (rec.op_detail) obj["detail"] = *rec.op_detail;
            out += obj.dump();
            out += '\n';
        }
        return out;
    }
    out = "op,latency_us,detail\n";
    for (const auto& rec : doc.records) {
        json lat = rec.latency_us;  // shortest round-trip rendering
        out += csv_escape(rec.op_name);
        out += ',';
        out += lat.dump();
        out += ',';
        out += csv_escape(rec.op_detail.value_or(""));
        out += '\n';
    }
    return out;
}

TraceDocument scrub(TraceDocument doc) {
    for (auto& rec : doc.records) rec.op_detail.reset();
    return doc;
}

OpLatencyMap aggregate(const TraceDocument& doc) {
    OpLatencyMap out;
    for (const auto& rec : doc.records) out[rec.op_name] += rec.latency_us;
    return out;
}

}  // namespace profet
