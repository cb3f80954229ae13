#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesurv/error.hpp"

namespace aesurv {

/// Terminal status of one subject's follow-up. A record carries exactly one
/// code: the first thing that happened (time-to-first-event data).
enum class EventCode : int {
    censored = 0,
    adverse_event = 1,
    death = 2,
    discontinuation = 3,
};

inline constexpr EventCode kAllEventCodes[] = {
    EventCode::censored,
    EventCode::adverse_event,
    EventCode::death,
    EventCode::discontinuation,
};

const char* event_name(EventCode code);

/// Accepts the integer wire codes 0..3 and the symbolic names
/// ("censored", "ae", "death", "discontinuation"), case-insensitively.
std::optional<EventCode> parse_event_code(std::string_view token);

/// Small value set over the four event codes.
class CodeSet {
  public:
    constexpr CodeSet() = default;
    constexpr CodeSet(std::initializer_list<EventCode> codes) {
        for (EventCode c : codes) mask_ |= bit(c);
    }

    constexpr bool contains(EventCode c) const { return (mask_ & bit(c)) != 0; }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr std::size_t size() const {
        std::size_t n = 0;
        for (unsigned m = mask_; m != 0; m >>= 1) n += m & 1u;
        return n;
    }
    constexpr CodeSet& insert(EventCode c) {
        mask_ |= bit(c);
        return *this;
    }
    constexpr bool intersects(CodeSet other) const { return (mask_ & other.mask_) != 0; }
    constexpr bool operator==(const CodeSet&) const = default;

    /// All real events: AE, death, discontinuation (not censoring).
    static constexpr CodeSet all_events() {
        return CodeSet{EventCode::adverse_event, EventCode::death, EventCode::discontinuation};
    }

    std::string to_string() const;

  private:
    static constexpr unsigned bit(EventCode c) { return 1u << static_cast<int>(c); }
    unsigned mask_ = 0;
};

/// One patient's follow-up: observed time, what ended it, and optionally the
/// time spent on study drug (for exposure-adjusted rates).
struct SubjectRecord {
    std::string subject_id;
    int group = 0; // binary treatment indicator, 0 or 1
    double time = 0.0;
    EventCode event = EventCode::censored;
    std::optional<double> exposure_time; // absent means the whole follow-up was exposed

    double effective_exposure() const { return exposure_time.value_or(time); }

    bool operator==(const SubjectRecord&) const = default;
};

struct DatasetMeta {
    std::string label;
    std::string time_unit = "days";
    /// Whether AEs were still collected after treatment discontinuation.
    /// Gates the treatment-policy recoding.
    bool ae_collection_after_discontinuation = false;
    /// Generator identity for simulated data, empty for ingested data.
    std::string rng;

    bool operator==(const DatasetMeta&) const = default;
};

/// Immutable after construction; safe to share across threads for read-only
/// estimation.
struct Dataset {
    std::vector<SubjectRecord> records;
    DatasetMeta meta;

    std::size_t size() const { return records.size(); }
    std::size_t group_size(int group) const;
    std::size_t count_events(int group, CodeSet codes) const;
};

struct Violation {
    long row = -1; // CSV line number when known, -1 for whole-dataset issues
    std::string subject_id;
    std::string message;
};

struct ValidationReport {
    // group -> event code -> count
    std::map<int, std::map<EventCode, std::size_t>> group_counts;
    double min_time = 0.0;
    double max_time = 0.0;
    std::vector<Violation> violations;

    bool valid() const { return violations.empty(); }
    std::string to_json() const;
    std::string to_text() const;
};

/// Parses `subject_id,group,time,event[,exposure_time]` CSV. Row order is
/// preserved. Throws Error with codes malformed_row, duplicate_subject,
/// non_positive_time, exposure_exceeds_time.
Dataset parse_csv(std::istream& in);
Dataset parse_csv_string(const std::string& text);
Dataset parse_csv_file(const std::string& path);

/// Inverse of parse_csv on valid datasets (meta is not serialized).
std::string serialize_csv(const Dataset& ds);
void write_csv_file(const Dataset& ds, const std::string& path);

/// Never throws; all problems are reported as violations.
ValidationReport validate(const Dataset& ds);

} // namespace aesurv
