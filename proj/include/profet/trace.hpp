#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "profet/errors.hpp"

namespace profet {

// One profiler event row. `op_detail` is the sensitive free-form field
// (layer locations, tensor shapes); everything downstream of scrub() must
// never see it.
struct RawTraceRecord {
    std::string op_name;
    std::optional<std::string> op_detail;
    double latency_us = 0.0;  // >= 0, finite
};

struct TraceDocument {
    std::vector<RawTraceRecord> records;
    std::map<std::string, std::string> meta;  // scenario id, instance type, source tag

    bool operator==(const TraceDocument&) const = default;
};

// Per-operation summed latency in microseconds. std::map keeps keys in a
// fixed canonical order, which pins the summation order everywhere.
using OpLatencyMap = std::map<std::string, double>;

enum class TraceFormat { Jsonl, Csv };

// Wire formats
//
// JSONL: one UTF-8 object per line, {"op": str, "latency_us": num,
// "detail": str (optional)}. Unknown extra keys are ignored. A line whose
// object carries a "meta" key and no "op" key sets document metadata.
// Blank lines are skipped.
//
// CSV: RFC-4180, header row `op,latency_us,detail` required; quoted fields
// may contain commas, doubled quotes, and newlines. An empty detail field
// means "no detail".
TraceDocument parse_trace(std::string_view raw, TraceFormat format);

// Inverse of parse_trace for the same format. CSV cannot carry metadata.
std::string serialize_trace(const TraceDocument& doc, TraceFormat format);

// Drops every op_detail. Idempotent; record order and latencies unchanged.
TraceDocument scrub(TraceDocument doc);

// Sums latencies per distinct op name, accumulating in document order.
OpLatencyMap aggregate(const TraceDocument& doc);

void validate(const RawTraceRecord& rec, std::size_t line = 0);

}  // namespace profet
