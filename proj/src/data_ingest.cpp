#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"

namespace seqadapt {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int year, int month, int day) {
    year -= month <= 2;
    const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool take_int(std::string_view text, std::size_t& pos, int digits, int& out) {
    if (pos + static_cast<std::size_t>(digits) > text.size()) return false;
    int value = 0;
    for (int i = 0; i < digits; ++i) {
        const char c = text[pos + static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += static_cast<std::size_t>(digits);
    out = value;
    return true;
}

std::string_view trim(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    return text;
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(delimiter, start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_value_field(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw ValidationError("bad numeric value '" + std::string(text) + "'");
    }
    return value;
}

RawEvent parse_record(std::string_view patient_id, std::string_view timestamp,
                      std::string_view category, std::string_view event_type,
                      std::optional<double> value) {
    if (patient_id.empty()) throw ValidationError("empty patient_id");
    if (event_type.empty()) throw ValidationError("empty event_type");
    const auto time_seconds = parse_iso8601(timestamp);
    if (!time_seconds) {
        throw ValidationError("unparseable timestamp '" + std::string(timestamp) + "'");
    }
    const auto parsed_category = parse_category(category);
    if (!parsed_category) {
        throw ValidationError("unknown category '" + std::string(category) + "'");
    }
    RawEvent event;
    event.patient_id = std::string(patient_id);
    event.time_seconds = *time_seconds;
    event.category = *parsed_category;
    event.event_type = std::string(event_type);
    event.value = value;
    return event;
}

void ingest_csv(std::istream& in, IngestResult& result) {
    std::string line;
    if (!std::getline(in, line)) return; // empty file
    // Copy the header names out of `line` before the row loop reuses it.
    std::map<std::string, std::size_t> columns;
    std::size_t header_width = 0;
    for (const std::string_view name : split_fields(line, ',')) {
        columns.emplace(std::string(name), header_width);
        ++header_width;
    }
    for (const char* required : {"patient_id", "timestamp", "category", "event_type"}) {
        if (!columns.contains(required)) {
            throw IoError(std::string("event file header is missing column '") + required +
                          "'");
        }
    }
    const std::size_t patient_column = columns.at("patient_id");
    const std::size_t timestamp_column = columns.at("timestamp");
    const std::size_t category_column = columns.at("category");
    const std::size_t type_column = columns.at("event_type");
    const bool has_value = columns.contains("value");
    const std::size_t value_column = has_value ? columns.at("value") : 0;

    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        const std::vector<std::string_view> fields = split_fields(line, ',');
        try {
            if (fields.size() != header_width) {
                throw ValidationError("expected " + std::to_string(header_width) +
                                      " fields, got " + std::to_string(fields.size()));
            }
            std::optional<double> value;
            if (has_value) value = parse_value_field(fields[value_column]);
            result.events.push_back(parse_record(fields[patient_column],
                                                 fields[timestamp_column],
                                                 fields[category_column],
                                                 fields[type_column], value));
        } catch (const Error& error) {
            result.issues.push_back({line_number, error.what()});
        }
    }
}

void ingest_jsonl(std::istream& in, IngestResult& result) {
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        try {
            const nlohmann::json record = nlohmann::json::parse(line);
            if (!record.is_object()) throw ValidationError("record is not an object");
            std::optional<double> value;
            if (record.contains("value") && !record.at("value").is_null()) {
                if (!record.at("value").is_number()) {
                    throw ValidationError("value is not numeric");
                }
                value = record.at("value").get<double>();
            }
            result.events.push_back(
                parse_record(record.value("patient_id", ""), record.value("timestamp", ""),
                             record.value("category", ""), record.value("event_type", ""),
                             value));
        } catch (const nlohmann::json::exception& error) {
            result.issues.push_back({line_number, std::string("bad record: ") + error.what()});
        } catch (const Error& error) {
            result.issues.push_back({line_number, error.what()});
        }
    }
}

} // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view text) {
    text = trim(text);
    std::size_t pos = 0;
    int year, month, day;
    if (!take_int(text, pos, 4, year)) return std::nullopt;
    if (pos >= text.size() || text[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_int(text, pos, 2, month)) return std::nullopt;
    if (pos >= text.size() || text[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_int(text, pos, 2, day)) return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;

    int hour = 0, minute = 0, second = 0;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') return std::nullopt;
        ++pos;
        if (!take_int(text, pos, 2, hour)) return std::nullopt;
        if (pos >= text.size() || text[pos] != ':') return std::nullopt;
        ++pos;
        if (!take_int(text, pos, 2, minute)) return std::nullopt;
        if (pos < text.size() && text[pos] == ':') {
            ++pos;
            if (!take_int(text, pos, 2, second)) return std::nullopt;
            if (pos < text.size() && text[pos] == '.') { // fraction discarded
                ++pos;
                const std::size_t start = pos;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
                if (pos == start) return std::nullopt;
            }
        }
        if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    }

    std::int64_t offset_seconds = 0;
    if (pos < text.size()) {
        const char sign = text[pos];
        if (sign == 'Z') {
            ++pos;
        } else if (sign == '+' || sign == '-') {
            ++pos;
            int off_hour, off_minute = 0;
            if (!take_int(text, pos, 2, off_hour)) return std::nullopt;
            if (pos < text.size() && text[pos] == ':') ++pos;
            if (pos < text.size() && !take_int(text, pos, 2, off_minute)) return std::nullopt;
            offset_seconds = (sign == '+' ? 1 : -1) * (off_hour * 3600LL + off_minute * 60LL);
        } else {
            return std::nullopt;
        }
    }
    if (pos != text.size()) return std::nullopt;

    return days_from_civil(year, month, day) * 86400LL + hour * 3600LL + minute * 60LL +
           second - offset_seconds;
}

IngestResult ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event file: " + path);
    IngestResult result;
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") {
        ingest_jsonl(in, result);
    } else if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        ingest_csv(in, result);
    } else {
        throw IoError("unsupported event file extension (expected .csv or .jsonl): " + path);
    }
    if (in.bad()) throw IoError("read failure for event file: " + path);
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const RawEvent& a, const RawEvent& b) {
                         if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
                         return a.time_seconds < b.time_seconds;
                     });
    return result;
}

std::map<std::string, ValueRange> load_ranges(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open range file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& error) {
        throw ConfigError("bad range file " + path + ": " + error.what());
    }
    if (!doc.is_object()) throw ConfigError("range file must be an object: " + path);
    std::map<std::string, ValueRange> ranges;
    for (const auto& [event_type, bounds] : doc.items()) {
        if (!bounds.is_array() || bounds.size() != 2 || !bounds[0].is_number() ||
            !bounds[1].is_number()) {
            throw ConfigError("range for '" + event_type + "' must be [low, high]");
        }
        ValueRange range{bounds[0].get<double>(), bounds[1].get<double>()};
        if (!(range.low <= range.high)) {
            throw ConfigError("range for '" + event_type + "' has low > high");
        }
        ranges[event_type] = range;
    }
    return ranges;
}

std::set<std::string> load_include_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open include list: " + path);
    std::set<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view entry = trim(line);
        if (entry.empty() || entry.front() == '#') continue;
        names.insert(std::string(entry));
    }
    return names;
}

} // namespace seqadapt
