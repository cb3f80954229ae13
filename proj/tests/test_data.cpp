#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "aesurv/data.hpp"

using namespace aesurv;

namespace {

Dataset small_mixed_dataset() {
    return parse_csv_string("subject_id,group,time,event,exposure_time\n"
                            "s1,0,10,1,\n"
                            "s2,0,5.5,0,\n"
                            "s3,1,7,2,6\n"
                            "s4,1,12,3,12\n"
                            "s5,0,3,ae,\n");
}

template <typename Fn>
std::string expect_error(Fn&& fn, ErrorCode code) {
    try {
        fn();
    } catch (const Error& e) {
        CHECK(e.code() == code);
        return e.what();
    }
    FAIL_CHECK("expected an Error to be thrown");
    return "";
}

} // namespace

TEST_CASE("event codes parse as integers and case-insensitive names") {
    CHECK(parse_event_code("0") == EventCode::censored);
    CHECK(parse_event_code("1") == EventCode::adverse_event);
    CHECK(parse_event_code("2") == EventCode::death);
    CHECK(parse_event_code("3") == EventCode::discontinuation);
    CHECK(parse_event_code("Censored") == EventCode::censored);
    CHECK(parse_event_code("AE") == EventCode::adverse_event);
    CHECK(parse_event_code("DEATH") == EventCode::death);
    CHECK(parse_event_code("Discontinuation") == EventCode::discontinuation);
    CHECK_FALSE(parse_event_code("4").has_value());
    CHECK_FALSE(parse_event_code("-1").has_value());
    CHECK_FALSE(parse_event_code("adverse").has_value());
}

TEST_CASE("parse_csv maps fields directly") {
    const Dataset ds = parse_csv_string("s1,0,10,1\n");
    REQUIRE(ds.records.size() == 1);
    CHECK(ds.records[0].subject_id == "s1");
    CHECK(ds.records[0].group == 0);
    CHECK(ds.records[0].time == doctest::Approx(10.0));
    CHECK(ds.records[0].event == EventCode::adverse_event);
    CHECK_FALSE(ds.records[0].exposure_time.has_value());
}

TEST_CASE("parse_csv accepts an optional header and preserves row order") {
    const Dataset ds = small_mixed_dataset();
    REQUIRE(ds.records.size() == 5);
    CHECK(ds.records[0].subject_id == "s1");
    CHECK(ds.records[4].subject_id == "s5");
    CHECK(ds.records[2].exposure_time == doctest::Approx(6.0));
    CHECK(ds.records[4].event == EventCode::adverse_event);
}

TEST_CASE("parse_csv error cases carry codes and row numbers") {
    const std::string dup_message = expect_error(
        [] { parse_csv_string("s1,0,10,1\ns1,1,5,0\n"); }, ErrorCode::duplicate_subject);
    CHECK(dup_message.find("row 2") != std::string::npos);
    expect_error([] { parse_csv_string("s1,0,10,1,12\n"); }, ErrorCode::exposure_exceeds_time);
    expect_error([] { parse_csv_string("s1,0,0,1\n"); }, ErrorCode::non_positive_time);
    expect_error([] { parse_csv_string("s1,0,ten,1\n"); }, ErrorCode::malformed_row);
    expect_error([] { parse_csv_string("s1,2,10,1\n"); }, ErrorCode::malformed_row);
    expect_error([] { parse_csv_string("s1,0,10\n"); }, ErrorCode::malformed_row);
    expect_error([] { parse_csv_string("s1,0,10,1,0\n"); }, ErrorCode::malformed_row);
}

TEST_CASE("serialize/parse round-trips valid datasets") {
    const Dataset original = small_mixed_dataset();
    const Dataset back = parse_csv_string(serialize_csv(original));
    REQUIRE(back.records.size() == original.records.size());
    CHECK(back.records == original.records);

    // Awkward doubles survive the round trip exactly.
    Dataset precise;
    precise.records.push_back({"p1", 0, 0.1 + 0.2, EventCode::adverse_event, std::nullopt});
    precise.records.push_back({"p2", 1, 1.0 / 3.0, EventCode::death, 1.0 / 7.0});
    const Dataset precise_back = parse_csv_string(serialize_csv(precise));
    CHECK(precise_back.records == precise.records);
}

TEST_CASE("validate reports per-group counts, time range and violations") {
    const Dataset ds = parse_csv_string("a,0,1,1\nb,0,2,1\nc,0,3,1\n");
    const ValidationReport report = validate(ds);
    CHECK(report.valid());
    CHECK(report.group_counts.at(0).at(EventCode::adverse_event) == 3);
    CHECK(report.min_time == doctest::Approx(1.0));
    CHECK(report.max_time == doctest::Approx(3.0));

    const ValidationReport empty_report = validate(Dataset{});
    CHECK_FALSE(empty_report.valid());
    REQUIRE(empty_report.violations.size() == 1);
    CHECK(empty_report.violations[0].message == "dataset contains no records");

    Dataset bad = ds;
    bad.records.push_back({"d", 0, 0.0, EventCode::censored, std::nullopt});
    const ValidationReport bad_report = validate(bad);
    CHECK_FALSE(bad_report.valid());
    REQUIRE(bad_report.violations.size() == 1);
    CHECK(bad_report.violations[0].row == 4);
}

TEST_CASE("validation is order-insensitive apart from row indices") {
    Dataset ds = small_mixed_dataset();
    ds.records.push_back({"dup", 1, 4.0, EventCode::death, std::nullopt});
    ds.records.push_back({"dup", 1, 9.0, EventCode::censored, std::nullopt});

    Dataset shuffled = ds;
    std::mt19937 rng(7);
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);

    const ValidationReport a = validate(ds);
    const ValidationReport b = validate(shuffled);
    CHECK(a.group_counts == b.group_counts);
    CHECK(a.min_time == b.min_time);
    CHECK(a.max_time == b.max_time);
    REQUIRE(a.violations.size() == b.violations.size());
    auto messages = [](const ValidationReport& r) {
        std::vector<std::string> out;
        for (const Violation& v : r.violations) out.push_back(v.message);
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(messages(a) == messages(b));
}

TEST_CASE("validation report JSON uses the stable field names") {
    const ValidationReport report = validate(small_mixed_dataset());
    const std::string j = report.to_json();
    CHECK(j.find("\"group_counts\"") != std::string::npos);
    CHECK(j.find("\"violations\"") != std::string::npos);
    CHECK(j.find("\"time_range\"") != std::string::npos);
}

TEST_CASE("CodeSet membership and labels") {
    const CodeSet set{EventCode::death, EventCode::discontinuation};
    CHECK(set.contains(EventCode::death));
    CHECK_FALSE(set.contains(EventCode::adverse_event));
    CHECK(set.size() == 2);
    CHECK(set.to_string() == "{death,discontinuation}");
    CHECK(CodeSet::all_events().size() == 3);
    CHECK_FALSE(CodeSet::all_events().contains(EventCode::censored));
}

TEST_CASE("effective exposure defaults to the whole follow-up") {
    SubjectRecord r{"x", 0, 10.0, EventCode::adverse_event, std::nullopt};
    CHECK(r.effective_exposure() == doctest::Approx(10.0));
    r.exposure_time = 4.0;
    CHECK(r.effective_exposure() == doctest::Approx(4.0));
}
