#include "aesurv/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "aesurv/numeric.hpp"

namespace aesurv {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<int> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

bool looks_like_header(const std::vector<std::string_view>& fields) {
    if (fields.size() < 4) return false;
    return lower(fields[0]) == "subject_id";
}

} // namespace

const char* event_name(EventCode code) {
    switch (code) {
        case EventCode::censored: return "censored";
        case EventCode::adverse_event: return "ae";
        case EventCode::death: return "death";
        case EventCode::discontinuation: return "discontinuation";
    }
    return "unknown";
}

std::optional<EventCode> parse_event_code(std::string_view token) {
    token = trim(token);
    if (auto num = parse_int(token)) {
        if (*num >= 0 && *num <= 3) return static_cast<EventCode>(*num);
        return std::nullopt;
    }
    const std::string name = lower(token);
    if (name == "censored") return EventCode::censored;
    if (name == "ae" || name == "adverse_event") return EventCode::adverse_event;
    if (name == "death") return EventCode::death;
    if (name == "discontinuation") return EventCode::discontinuation;
    return std::nullopt;
}

std::string CodeSet::to_string() const {
    std::string out = "{";
    bool first = true;
    for (EventCode c : kAllEventCodes) {
        if (!contains(c)) continue;
        if (!first) out += ",";
        out += event_name(c);
        first = false;
    }
    out += "}";
    return out;
}

std::size_t Dataset::group_size(int group) const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [&](const SubjectRecord& r) { return r.group == group; }));
}

std::size_t Dataset::count_events(int group, CodeSet codes) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const SubjectRecord& r) {
            return r.group == group && codes.contains(r.event);
        }));
}

Dataset parse_csv(std::istream& in) {
    Dataset ds;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    long row = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        auto fields = split_fields(view);
        if (first_content_line) {
            first_content_line = false;
            if (looks_like_header(fields)) continue;
        }
        if (fields.size() != 4 && fields.size() != 5) {
            fail(ErrorCode::malformed_row,
                 "row " + std::to_string(row) + ": expected 4 or 5 fields, got " +
                     std::to_string(fields.size()));
        }
        SubjectRecord rec;
        rec.subject_id = std::string(fields[0]);
        if (rec.subject_id.empty()) {
            fail(ErrorCode::malformed_row, "row " + std::to_string(row) + ": empty subject_id");
        }
        auto group = parse_int(fields[1]);
        if (!group || (*group != 0 && *group != 1)) {
            fail(ErrorCode::malformed_row,
                 "row " + std::to_string(row) + ": group must be 0 or 1, got '" +
                     std::string(fields[1]) + "'");
        }
        rec.group = *group;
        auto time = parse_double(fields[2]);
        if (!time) {
            fail(ErrorCode::malformed_row, "row " + std::to_string(row) + ": unparseable time '" +
                                               std::string(fields[2]) + "'");
        }
        rec.time = *time;
        auto event = parse_event_code(fields[3]);
        if (!event) {
            fail(ErrorCode::malformed_row, "row " + std::to_string(row) + ": unknown event '" +
                                               std::string(fields[3]) + "'");
        }
        rec.event = *event;
        if (fields.size() == 5 && !fields[4].empty()) {
            auto exposure = parse_double(fields[4]);
            if (!exposure) {
                fail(ErrorCode::malformed_row,
                     "row " + std::to_string(row) + ": unparseable exposure_time '" +
                         std::string(fields[4]) + "'");
            }
            rec.exposure_time = *exposure;
        }
        if (!seen_ids.insert(rec.subject_id).second) {
            fail(ErrorCode::duplicate_subject,
                 "row " + std::to_string(row) + ": duplicate subject_id '" + rec.subject_id + "'");
        }
        if (!(rec.time > 0.0)) {
            fail(ErrorCode::non_positive_time,
                 "row " + std::to_string(row) + ": time must be positive, got " +
                     format_double(rec.time));
        }
        if (rec.exposure_time) {
            if (!(*rec.exposure_time > 0.0)) {
                fail(ErrorCode::malformed_row,
                     "row " + std::to_string(row) + ": exposure_time must be positive");
            }
            if (*rec.exposure_time > rec.time) {
                fail(ErrorCode::exposure_exceeds_time,
                     "row " + std::to_string(row) + ": exposure_time " +
                         format_double(*rec.exposure_time) + " exceeds follow-up time " +
                         format_double(rec.time));
            }
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset parse_csv_string(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

Dataset parse_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    Dataset ds = parse_csv(in);
    ds.meta.label = path;
    return ds;
}

std::string serialize_csv(const Dataset& ds) {
    const bool any_exposure = std::any_of(ds.records.begin(), ds.records.end(),
                                          [](const SubjectRecord& r) { return r.exposure_time.has_value(); });
    std::string out = any_exposure ? "subject_id,group,time,event,exposure_time\n"
                                   : "subject_id,group,time,event\n";
    for (const SubjectRecord& r : ds.records) {
        out += r.subject_id;
        out += ',';
        out += std::to_string(r.group);
        out += ',';
        out += format_double(r.time);
        out += ',';
        out += std::to_string(static_cast<int>(r.event));
        if (any_exposure) {
            out += ',';
            if (r.exposure_time) out += format_double(*r.exposure_time);
        }
        out += '\n';
    }
    return out;
}

void write_csv_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    out << serialize_csv(ds);
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

ValidationReport validate(const Dataset& ds) {
    ValidationReport report;
    if (ds.records.empty()) {
        report.violations.push_back({-1, "", "dataset contains no records"});
        return report;
    }
    report.min_time = std::numeric_limits<double>::infinity();
    report.max_time = -std::numeric_limits<double>::infinity();
    std::unordered_set<std::string> seen_ids;
    long row = 0;
    for (const SubjectRecord& r : ds.records) {
        ++row;
        report.group_counts[r.group][r.event] += 1;
        report.min_time = std::min(report.min_time, r.time);
        report.max_time = std::max(report.max_time, r.time);
        if (!seen_ids.insert(r.subject_id).second) {
            report.violations.push_back({row, r.subject_id, "duplicate subject_id"});
        }
        if (!(r.time > 0.0)) {
            report.violations.push_back({row, r.subject_id, "non-positive follow-up time"});
        }
        if (r.exposure_time && *r.exposure_time > r.time) {
            report.violations.push_back({row, r.subject_id, "exposure_time exceeds follow-up time"});
        }
        if (r.exposure_time && !(*r.exposure_time > 0.0)) {
            report.violations.push_back({row, r.subject_id, "non-positive exposure_time"});
        }
        if (r.group != 0 && r.group != 1) {
            report.violations.push_back({row, r.subject_id, "group outside {0,1}"});
        }
    }
    return report;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["group_counts"] = nlohmann::json::object();
    for (const auto& [group, counts] : group_counts) {
        nlohmann::json per_group = nlohmann::json::object();
        for (const auto& [code, n] : counts) per_group[event_name(code)] = n;
        j["group_counts"][std::to_string(group)] = per_group;
    }
    j["time_range"] = {min_time, max_time};
    j["violations"] = nlohmann::json::array();
    for (const Violation& v : violations) {
        j["violations"].push_back({{"row", v.row}, {"subject_id", v.subject_id}, {"message", v.message}});
    }
    j["valid"] = valid();
    return j.dump(2);
}

std::string ValidationReport::to_text() const {
    std::ostringstream out;
    out << "validation: " << (valid() ? "ok" : "FAILED") << "\n";
    for (const auto& [group, counts] : group_counts) {
        out << "  group " << group << ":";
        for (const auto& [code, n] : counts) out << " " << event_name(code) << "=" << n;
        out << "\n";
    }
    out << "  time range: [" << min_time << ", " << max_time << "]\n";
    for (const Violation& v : violations) {
        out << "  violation";
        if (v.row >= 0) out << " (row " << v.row << ")";
        if (!v.subject_id.empty()) out << " [" << v.subject_id << "]";
        out << ": " << v.message << "\n";
    }
    return out.str();
}

} // namespace aesurv
